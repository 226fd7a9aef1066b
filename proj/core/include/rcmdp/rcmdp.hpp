#pragma once

#include "rcmdp/feasibility.hpp"
#include "rcmdp/io.hpp"
#include "rcmdp/oracle.hpp"
#include "rcmdp/policy.hpp"
#include "rcmdp/problem.hpp"
#include "rcmdp/risk.hpp"
#include "rcmdp/risk_measure.hpp"
#include "rcmdp/solver.hpp"
