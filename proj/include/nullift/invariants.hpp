#pragma once

#include "nullift/invariants/killing.hpp"
