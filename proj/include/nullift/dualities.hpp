#pragma once

#include "nullift/dualities/catalog.hpp"
#include "nullift/dualities/conditions.hpp"
#include "nullift/dualities/map.hpp"
