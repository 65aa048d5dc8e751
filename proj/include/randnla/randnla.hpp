#pragma once

#include "randnla/errorest.hpp"
#include "randnla/errors.hpp"
#include "randnla/fullrank.hpp"
#include "randnla/iterative.hpp"
#include "randnla/leastsq.hpp"
#include "randnla/leverage.hpp"
#include "randnla/linalg.hpp"
#include "randnla/lowrank.hpp"
#include "randnla/parallel.hpp"
#include "randnla/rng.hpp"
#include "randnla/serialize.hpp"
#include "randnla/sketching.hpp"
#include "randnla/trace.hpp"
