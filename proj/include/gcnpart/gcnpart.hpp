#pragma once

#include "gcnpart/error.hpp"
#include "gcnpart/rng.hpp"
#include "gcnpart/sparse.hpp"
#include "gcnpart/gcn.hpp"
#include "gcnpart/models.hpp"
#include "gcnpart/partitioner.hpp"
#include "gcnpart/comm_plan.hpp"
#include "gcnpart/runtime.hpp"
#include "gcnpart/metrics.hpp"
#include "gcnpart/graph_io.hpp"
#include "gcnpart/experiment.hpp"
