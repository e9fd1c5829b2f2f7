#pragma once

#include "riphs/config.hpp"
#include "riphs/errors.hpp"
#include "riphs/io.hpp"
#include "riphs/ivp.hpp"
#include "riphs/model.hpp"
#include "riphs/models/gas_piston.hpp"
#include "riphs/models/heat_exchanger.hpp"
#include "riphs/mpc.hpp"
#include "riphs/ocp.hpp"
#include "riphs/solver.hpp"
#include "riphs/svg.hpp"
#include "riphs/threads.hpp"
#include "riphs/turnpike.hpp"
#include "riphs/verify.hpp"
