#pragma once

#include <string>

#include "tracker/dataset.hpp"
#include "tracker/plants.hpp"

namespace tracker {

// Scripted excitation drives: emulates a human driver exercising the
// platform with randomized command sequences built from held steps, linear
// ramps, band-limited dither, and speed-servo cruise stretches, covering
// the operating envelope. Episodes are fixed-length drives from rest;
// `rows` counts transitions in total across all drives.
TransitionDataset generate_gem_transitions(int rows, unsigned seed,
                                           const GemPlantParams& plant = {});
TransitionDataset generate_warthog_transitions(
    int rows, unsigned seed, const WarthogPlantParams& plant = {});

// Ten-bin occupancy histogram per channel, as a text report; flags any
// channel whose occupied span collapses to a point.
std::string coverage_report(const TransitionDataset& data);

}  // namespace tracker
