#pragma once

#include <rangepta/bitsets.hpp>
#include <rangepta/commands.hpp>
#include <rangepta/error.hpp>
#include <rangepta/hierarchy.hpp>
#include <rangepta/interval.hpp>
#include <rangepta/pag.hpp>
#include <rangepta/ptsets.hpp>
#include <rangepta/solver.hpp>
#include <rangepta/synthetic.hpp>
