// fockfb.hpp: Umbrella header

#pragma once

#include "fock_algebra.hpp"
#include "measurement.hpp"
#include "feedback.hpp"
#include "filter.hpp"
#include "trajectory.hpp"
#include "ensemble.hpp"
#include "verify.hpp"
#include "io.hpp"
