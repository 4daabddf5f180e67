#pragma once

// Generated from data/fixture_basis.json; the two must stay byte-identical
// (checked by test_basis).

#include <string_view>

namespace mrsq {

inline constexpr std::string_view fixture_basis_json = R"json({
  "dwell_time_s": 0.0005,
  "n_points": 2048,
  "metabolites": [
    {"name": "NAA", "lines": [
      {"f_hz": -343.8, "amp": 3.0, "damp_hz": 12.0, "phase_rad": 0.0},
      {"f_hz": -282.7, "amp": 0.5, "damp_hz": 12.0, "phase_rad": 0.0},
      {"f_hz": -258.8, "amp": 0.5, "damp_hz": 12.0, "phase_rad": 0.0},
      {"f_hz": -40.6, "amp": 1.0, "damp_hz": 12.0, "phase_rad": 0.0}
    ]},
    {"name": "Cr", "lines": [
      {"f_hz": -213.6, "amp": 3.0, "damp_hz": 12.0, "phase_rad": 0.0},
      {"f_hz": -100.5, "amp": 2.0, "damp_hz": 12.0, "phase_rad": 0.0}
    ]},
    {"name": "PCr", "lines": [
      {"f_hz": -213.4, "amp": 3.0, "damp_hz": 12.0, "phase_rad": 0.0},
      {"f_hz": -98.3, "amp": 1.0, "damp_hz": 12.0, "phase_rad": 0.0}
    ]},
    {"name": "Cho", "lines": [
      {"f_hz": -193.5, "amp": 3.0, "damp_hz": 12.0, "phase_rad": 0.0},
      {"f_hz": -135.0, "amp": 1.0, "damp_hz": 12.0, "phase_rad": 0.0},
      {"f_hz": -53.5, "amp": 1.0, "damp_hz": 12.0, "phase_rad": 0.0}
    ]},
    {"name": "Glu", "lines": [
      {"f_hz": -339.4, "amp": 1.0, "damp_hz": 12.0, "phase_rad": 0.0},
      {"f_hz": -329.5, "amp": 1.0, "damp_hz": 12.0, "phase_rad": 0.0},
      {"f_hz": -300.9, "amp": 2.0, "damp_hz": 12.0, "phase_rad": 0.0},
      {"f_hz": -122.1, "amp": 1.0, "damp_hz": 12.0, "phase_rad": 0.0}
    ]},
    {"name": "Gln", "lines": [
      {"f_hz": -330.7, "amp": 1.0, "damp_hz": 12.0, "phase_rad": 0.0},
      {"f_hz": -327.6, "amp": 1.0, "damp_hz": 12.0, "phase_rad": 0.0},
      {"f_hz": -289.6, "amp": 2.0, "damp_hz": 12.0, "phase_rad": 0.0},
      {"f_hz": -120.9, "amp": 1.0, "damp_hz": 12.0, "phase_rad": 0.0}
    ]}
  ],
  "background":
    {"name": "MM", "lines": [
      {"f_hz": -485.3, "amp": 3.0, "damp_hz": 100.0, "phase_rad": 0.0},
      {"f_hz": -434.2, "amp": 3.0, "damp_hz": 120.0, "phase_rad": 0.0},
      {"f_hz": -344.8, "amp": 4.0, "damp_hz": 150.0, "phase_rad": 0.0},
      {"f_hz": -217.1, "amp": 3.0, "damp_hz": 150.0, "phase_rad": 0.0}
    ]}
}
)json";

} // namespace mrsq
