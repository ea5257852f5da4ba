#pragma once

#include "twinpurify/augment.hpp"
#include "twinpurify/error.hpp"
#include "twinpurify/eval/dilution.hpp"
#include "twinpurify/eval/kfold.hpp"
#include "twinpurify/eval/logistic.hpp"
#include "twinpurify/eval/metrics.hpp"
#include "twinpurify/expr_data.hpp"
#include "twinpurify/interpret.hpp"
#include "twinpurify/models/autoencoder.hpp"
#include "twinpurify/models/barlow.hpp"
#include "twinpurify/models/embedder.hpp"
#include "twinpurify/models/pca.hpp"
#include "twinpurify/models/twinpurify.hpp"
#include "twinpurify/nn/adam.hpp"
#include "twinpurify/nn/checkpoint.hpp"
#include "twinpurify/nn/gradcheck.hpp"
#include "twinpurify/nn/mlp.hpp"
#include "twinpurify/random.hpp"
#include "twinpurify/stats.hpp"
#include "twinpurify/survival/cox.hpp"
#include "twinpurify/survival/km.hpp"
#include "twinpurify/survival/pipeline.hpp"
#include "twinpurify/synth_cohort.hpp"

namespace twinpurify {
inline constexpr const char* kVersion = "0.1.0";
}
