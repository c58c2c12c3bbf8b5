#pragma once

#include "nullift/geometry/connection.hpp"
#include "nullift/geometry/curvature.hpp"
#include "nullift/geometry/metric.hpp"
#include "nullift/geometry/schwarzian.hpp"
#include "nullift/geometry/tensor.hpp"
