#pragma once

#include "nullift/quantum/yamabe.hpp"
