#pragma once
#include <ihtlab/core_linalg.hpp>
#include <ihtlab/errors.hpp>
#include <ihtlab/experiments.hpp>
#include <ihtlab/iht_solver.hpp>
#include <ihtlab/losses.hpp>
#include <ihtlab/random.hpp>
#include <ihtlab/risk_eval.hpp>
#include <ihtlab/stability.hpp>
#include <ihtlab/synth_data.hpp>
