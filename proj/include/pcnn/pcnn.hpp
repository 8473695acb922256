#pragma once

// Umbrella header for the pcnn library.

#include "pcnn/dataset.hpp"
#include "pcnn/error.hpp"
#include "pcnn/image.hpp"
#include "pcnn/models.hpp"
#include "pcnn/nn.hpp"
#include "pcnn/rng.hpp"
#include "pcnn/synthetic.hpp"
#include "pcnn/tensor.hpp"
#include "pcnn/train.hpp"
