#pragma once

#include "nullift/lifts/lift.hpp"
#include "nullift/lifts/natural_system.hpp"
#include "nullift/lifts/related.hpp"
