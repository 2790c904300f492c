#pragma once

#include "imc/gamble.hpp"
#include "imc/random.hpp"
#include "imc/credal.hpp"
#include "imc/chain.hpp"
#include "imc/tree.hpp"
#include "imc/hitting.hpp"
#include "imc/ergodic.hpp"
#include "imc/spec_file.hpp"
