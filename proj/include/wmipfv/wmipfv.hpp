/** Umbrella header. */
#ifndef WMIPFV_WMIPFV_HPP
#define WMIPFV_WMIPFV_HPP

#include "bench.hpp"
#include "bound_propagation.hpp"
#include "generators.hpp"
#include "io.hpp"
#include "models.hpp"
#include "oracle.hpp"
#include "properties.hpp"
#include "training.hpp"
#include "verifier.hpp"
#include "wmi.hpp"

#endif
