#pragma once

// Umbrella header for the unlearning-for-image-restoration library.

#include "uir/archive.hpp"
#include "uir/config.hpp"
#include "uir/corpus.hpp"
#include "uir/degrade.hpp"
#include "uir/graph.hpp"
#include "uir/metrics.hpp"
#include "uir/model.hpp"
#include "uir/optim.hpp"
#include "uir/png.hpp"
#include "uir/report.hpp"
#include "uir/rng.hpp"
#include "uir/tensor.hpp"
#include "uir/train.hpp"
#include "uir/unlearn.hpp"
