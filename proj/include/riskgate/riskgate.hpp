#pragma once

#include "riskgate/engine.hpp"
#include "riskgate/errors.hpp"
#include "riskgate/io.hpp"
#include "riskgate/market.hpp"
#include "riskgate/matrix.hpp"
#include "riskgate/rng.hpp"
#include "riskgate/scenario.hpp"
#include "riskgate/selection.hpp"
#include "riskgate/tolerance.hpp"
