#pragma once

#include "incproc/configuration.hpp"
#include "incproc/dynamics.hpp"
#include "incproc/empirical.hpp"
#include "incproc/error.hpp"
#include "incproc/ldp.hpp"
#include "incproc/log_math.hpp"
#include "incproc/model.hpp"
#include "incproc/partition_table.hpp"
#include "incproc/rng.hpp"
#include "incproc/sampling.hpp"
#include "incproc/sum_tree.hpp"
