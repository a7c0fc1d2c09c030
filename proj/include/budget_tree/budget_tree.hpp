#ifndef BUDGET_TREE_BUDGET_TREE_HPP_
#define BUDGET_TREE_BUDGET_TREE_HPP_

#include "budget_tree/data.hpp"
#include "budget_tree/error.hpp"
#include "budget_tree/logistic.hpp"
#include "budget_tree/lp_train.hpp"
#include "budget_tree/model_io.hpp"
#include "budget_tree/parallel.hpp"
#include "budget_tree/pipeline.hpp"
#include "budget_tree/policy.hpp"
#include "budget_tree/risk.hpp"
#include "budget_tree/risk_check.hpp"
#include "budget_tree/sensors.hpp"
#include "budget_tree/simplex.hpp"
#include "budget_tree/subset_search.hpp"
#include "budget_tree/tree.hpp"

#endif  // BUDGET_TREE_BUDGET_TREE_HPP_
