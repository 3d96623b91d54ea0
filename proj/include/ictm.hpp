#pragma once

#include "ictm/dense_problem.hpp"
#include "ictm/enumerate.hpp"
#include "ictm/errors.hpp"
#include "ictm/fixed_point.hpp"
#include "ictm/grid.hpp"
#include "ictm/image.hpp"
#include "ictm/indicator.hpp"
#include "ictm/kernel.hpp"
#include "ictm/problem.hpp"
#include "ictm/reconstruct.hpp"
#include "ictm/segment.hpp"
#include "ictm/solver.hpp"
#include "ictm/synthetic.hpp"
#include "ictm/verify.hpp"
#include "ictm/version.hpp"
