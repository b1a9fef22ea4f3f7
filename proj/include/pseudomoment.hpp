#pragma once

#include "pseudomoment/errors.hpp"
#include "pseudomoment/parallel.hpp"
#include "pseudomoment/primes.hpp"
#include "pseudomoment/multfun.hpp"
#include "pseudomoment/steinhaus.hpp"
#include "pseudomoment/quadrature.hpp"
#include "pseudomoment/dirichlet.hpp"
#include "pseudomoment/expectations.hpp"
#include "pseudomoment/moments.hpp"
