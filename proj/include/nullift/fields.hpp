#pragma once

#include "nullift/errors.hpp"
#include "nullift/fields/expression.hpp"
#include "nullift/fields/jet.hpp"
#include "nullift/fields/parser.hpp"
#include "nullift/fields/scalar_field.hpp"
