#pragma once

// Umbrella header for the ONTRAM library: ordinal neural network
// transformation models, preprocessing, staged training, treatment-effect
// estimation, evaluation metrics and the synthetic-trial generator.

#include "ontram/adam.hpp"
#include "ontram/config.hpp"
#include "ontram/csv.hpp"
#include "ontram/effects.hpp"
#include "ontram/errors.hpp"
#include "ontram/impute.hpp"
#include "ontram/likelihood.hpp"
#include "ontram/logistic.hpp"
#include "ontram/metrics.hpp"
#include "ontram/model.hpp"
#include "ontram/pipeline.hpp"
#include "ontram/rng.hpp"
#include "ontram/schema.hpp"
#include "ontram/serialize.hpp"
#include "ontram/simulate.hpp"
#include "ontram/split.hpp"
#include "ontram/standardize.hpp"
#include "ontram/train.hpp"
