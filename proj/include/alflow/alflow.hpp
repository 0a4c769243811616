#pragma once

#include "alflow/poly.hpp"
#include "alflow/curve.hpp"
#include "alflow/neumann.hpp"
#include "alflow/mumford.hpp"
#include "alflow/alfn.hpp"
#include "alflow/spectral.hpp"
#include "alflow/cli.hpp"
