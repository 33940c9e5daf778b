#pragma once

// Umbrella header for the patent phrase-matching pipeline.

#include "ppmatch/awp.hpp"
#include "ppmatch/backprop.hpp"
#include "ppmatch/checkpoint.hpp"
#include "ppmatch/csv.hpp"
#include "ppmatch/dataset.hpp"
#include "ppmatch/encoder.hpp"
#include "ppmatch/ensemble.hpp"
#include "ppmatch/errors.hpp"
#include "ppmatch/files.hpp"
#include "ppmatch/loss.hpp"
#include "ppmatch/metrics.hpp"
#include "ppmatch/optim.hpp"
#include "ppmatch/predict.hpp"
#include "ppmatch/rng.hpp"
#include "ppmatch/sequence.hpp"
#include "ppmatch/splits.hpp"
#include "ppmatch/train.hpp"
#include "ppmatch/vocab.hpp"
