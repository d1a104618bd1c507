#pragma once

#include "thermobox/analysis.hpp"
#include "thermobox/boxcar.hpp"
#include "thermobox/errors.hpp"
#include "thermobox/inverse.hpp"
#include "thermobox/io.hpp"
#include "thermobox/oracle.hpp"
#include "thermobox/parallel.hpp"
#include "thermobox/physics.hpp"
#include "thermobox/quadrature.hpp"
#include "thermobox/region.hpp"
#include "thermobox/region_bounds.hpp"
#include "thermobox/roots.hpp"
#include "thermobox/transmission.hpp"
#include "thermobox/transport.hpp"
