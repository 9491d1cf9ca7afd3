#pragma once

#include "wass/point.hpp"
#include "wass/random.hpp"
#include "wass/measure.hpp"
#include "wass/transport.hpp"
#include "wass/geodesy.hpp"
#include "wass/functionals.hpp"
#include "wass/tail.hpp"
#include "wass/convergence.hpp"
#include "wass/sequences.hpp"
#include "wass/schemes.hpp"
#include "wass/io.hpp"
#include "wass/experiment.hpp"
