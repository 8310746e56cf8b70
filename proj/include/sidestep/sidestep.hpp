#ifndef SIDESTEP_SIDESTEP_HPP
#define SIDESTEP_SIDESTEP_HPP

#include "sidestep/error.hpp"
#include "sidestep/rng.hpp"
#include "sidestep/polyexp.hpp"
#include "sidestep/shiftops.hpp"
#include "sidestep/spectral.hpp"
#include "sidestep/models.hpp"
#include "sidestep/parallel.hpp"
#include "sidestep/estimation.hpp"
#include "sidestep/theorem.hpp"
#include "sidestep/io.hpp"
#include "sidestep/config.hpp"
#include "sidestep/driver.hpp"

#endif // SIDESTEP_SIDESTEP_HPP
