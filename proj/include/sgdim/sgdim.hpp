// Umbrella header for the library (everything except the command line).
#pragma once

#include "sgdim/arrangement.hpp"
#include "sgdim/certifier.hpp"
#include "sgdim/dependency.hpp"
#include "sgdim/error.hpp"
#include "sgdim/io.hpp"
#include "sgdim/linalg.hpp"
#include "sgdim/rational.hpp"
#include "sgdim/scaling.hpp"
