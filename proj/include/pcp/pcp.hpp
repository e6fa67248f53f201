#pragma once

#include "pcp/adam.hpp"
#include "pcp/bytes.hpp"
#include "pcp/checkpoint.hpp"
#include "pcp/coreset.hpp"
#include "pcp/csv.hpp"
#include "pcp/dataset_io.hpp"
#include "pcp/distance.hpp"
#include "pcp/distill.hpp"
#include "pcp/ecg.hpp"
#include "pcp/errors.hpp"
#include "pcp/gradcheck.hpp"
#include "pcp/losses.hpp"
#include "pcp/matrix.hpp"
#include "pcp/metrics.hpp"
#include "pcp/model.hpp"
#include "pcp/ops.hpp"
#include "pcp/probe.hpp"
#include "pcp/rng.hpp"
#include "pcp/strategies.hpp"
#include "pcp/tensor.hpp"
#include "pcp/train.hpp"
