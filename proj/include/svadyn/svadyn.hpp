#pragma once

#include "svadyn/spatial.hpp"
#include "svadyn/model.hpp"
#include "svadyn/kinematics.hpp"
#include "svadyn/dynamics.hpp"
#include "svadyn/regressor.hpp"
#include "svadyn/identify.hpp"
#include "svadyn/control.hpp"
#include "svadyn/sim.hpp"
#include "svadyn/random_models.hpp"
#include "svadyn/io.hpp"
#include "svadyn/verify.hpp"
#include "svadyn/bench.hpp"
