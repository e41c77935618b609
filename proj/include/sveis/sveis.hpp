#ifndef SVEIS_SVEIS_HPP
#define SVEIS_SVEIS_HPP

#include "sveis/analysis.hpp"
#include "sveis/errors.hpp"
#include "sveis/io.hpp"
#include "sveis/model.hpp"
#include "sveis/ode.hpp"
#include "sveis/ou.hpp"
#include "sveis/sde.hpp"

#endif  // SVEIS_SVEIS_HPP
