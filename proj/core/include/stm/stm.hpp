#pragma once

#include "stm/errors.hpp"
#include "stm/generator.hpp"
#include "stm/grid.hpp"
#include "stm/io.hpp"
#include "stm/matrix.hpp"
#include "stm/parallel.hpp"
#include "stm/trainers.hpp"
#include "stm/wta.hpp"
