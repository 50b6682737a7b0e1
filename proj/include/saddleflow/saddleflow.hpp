#pragma once

#include "saddleflow/analysis.hpp"
#include "saddleflow/core.hpp"
#include "saddleflow/flow.hpp"
#include "saddleflow/functions.hpp"
#include "saddleflow/oracle.hpp"
#include "saddleflow/problem.hpp"
#include "saddleflow/problem_io.hpp"
#include "saddleflow/runner.hpp"
#include "saddleflow/sets.hpp"
#include "saddleflow/trajectory_io.hpp"
