#pragma once

#include "nullift/dynamics/curves.hpp"
#include "nullift/dynamics/integrator.hpp"
#include "nullift/dynamics/phase.hpp"
#include "nullift/dynamics/reparameterize.hpp"
