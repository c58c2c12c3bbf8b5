#pragma once

#include "nullift/cli/report.hpp"
#include "nullift/cli/runner.hpp"
#include "nullift/cli/scenario.hpp"
