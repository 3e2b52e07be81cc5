#pragma once

#include "densevoc/aggregate.hpp"
#include "densevoc/assoc.hpp"
#include "densevoc/capmetrics.hpp"
#include "densevoc/core.hpp"
#include "densevoc/eval.hpp"
#include "densevoc/gradcheck.hpp"
#include "densevoc/ground.hpp"
#include "densevoc/hungarian.hpp"
#include "densevoc/io.hpp"
#include "densevoc/losses.hpp"
#include "densevoc/random.hpp"
#include "densevoc/synth.hpp"
