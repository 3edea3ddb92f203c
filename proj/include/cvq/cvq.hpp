#ifndef CVQ_CVQ_HPP
#define CVQ_CVQ_HPP

#include "errors.hpp"
#include "fock.hpp"
#include "gate.hpp"
#include "generation.hpp"
#include "io.hpp"
#include "nonlinear_squeezing.hpp"
#include "optimize.hpp"
#include "random.hpp"
#include "temporal.hpp"
#include "tomography.hpp"

#endif // CVQ_CVQ_HPP
