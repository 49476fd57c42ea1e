#pragma once
// Umbrella header.

#include "avivis/blob.hpp"
#include "avivis/cart.hpp"
#include "avivis/classify.hpp"
#include "avivis/colorspace.hpp"
#include "avivis/commands.hpp"
#include "avivis/common.hpp"
#include "avivis/config.hpp"
#include "avivis/cooccurrence.hpp"
#include "avivis/dataset.hpp"
#include "avivis/eval.hpp"
#include "avivis/extractors.hpp"
#include "avivis/feat_color.hpp"
#include "avivis/feat_shape.hpp"
#include "avivis/feat_texture.hpp"
#include "avivis/featstore.hpp"
#include "avivis/fft.hpp"
#include "avivis/gbdt.hpp"
#include "avivis/image.hpp"
#include "avivis/metrics.hpp"
#include "avivis/mlp.hpp"
#include "avivis/pipeline.hpp"
#include "avivis/plot.hpp"
#include "avivis/preprocess.hpp"
#include "avivis/select.hpp"
#include "avivis/svm.hpp"
#include "avivis/synth.hpp"
