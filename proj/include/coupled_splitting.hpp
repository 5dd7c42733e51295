#pragma once

#include <coupled_splitting/errors.hpp>
#include <coupled_splitting/linalg.hpp>
#include <coupled_splitting/prox.hpp>
#include <coupled_splitting/model.hpp>
#include <coupled_splitting/solver.hpp>
#include <coupled_splitting/spectral.hpp>
#include <coupled_splitting/rp.hpp>
#include <coupled_splitting/io.hpp>
