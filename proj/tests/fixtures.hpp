#pragma once

#include "stochreg/model.hpp"
#include "stochreg/synthesis.hpp"

// Numeric fixtures for the two worked examples: a servomotor tracking a
// harmonic reference, and a surge-tank level regulator with a constant
// reference plus ramp disturbances.

namespace fixtures {

using stochreg::ExoSystem;
using stochreg::InternalModel;
using stochreg::Matrix;
using stochreg::PlantModel;
using stochreg::StabilizerParams;
using stochreg::Vector;

inline PlantModel example1_plant() {
  PlantModel plant;
  plant.A_p = (Matrix(2, 2) << -2, 1, 0, 0.8).finished();
  plant.B_p = (Matrix(2, 1) << 0, 1).finished();
  plant.E_p = (Matrix(2, 2) << 1, 0, 0, 0).finished();
  plant.C_p = (Matrix(1, 2) << 0.1, 0).finished();
  plant.F_p = (Matrix(1, 2) << 0, 2).finished();
  return plant;
}

inline ExoSystem example1_exo() {
  ExoSystem exo;
  exo.S = (Matrix(2, 2) << 0, 1, -1, 0).finished();
  return exo;
}

inline InternalModel example1_internal_model() {
  InternalModel im;
  im.G1 = (Matrix(2, 2) << 0, 1, -1, 0).finished();
  im.G2 = (Matrix(2, 1) << -5, -4).finished();
  im.K = (Matrix(1, 2) << 1, 0).finished();
  return im;
}

inline StabilizerParams example1_stabilizer() {
  StabilizerParams stab;
  stab.A_zeta = (Matrix(4, 4) <<
      -2, 1, 14.98, 0,
      -5.85, -2.8, 37.94, 16.5,
      -0.5, 0, -3.6, 1,
      -0.4, 0, -2.24, 0).finished();
  stab.B_zeta = (Matrix(4, 1) << -14.98, -33.44, 3.6, 1.24).finished();
  stab.C_zeta = (Matrix(1, 4) << -5.85, -3.6, 4.5, 16.5).finished();
  stab.D_zeta = Matrix::Zero(1, 1);
  return stab;
}

inline Matrix example1_Q() {
  return (Matrix(8, 1) << 1163.51, 3374.21, 132.36, 578.15, 100.99, 154.48, 120.87, 170.665)
      .finished();
}

inline Matrix example1_W() { return (Matrix(1, 1) << -116.008).finished(); }

inline double example1_lambda() { return 2.0; }
inline double example1_gamma() { return 0.1; }

inline PlantModel example2_plant() {
  PlantModel plant;
  plant.A_p = (Matrix(2, 2) << 0, 1, 0.5, 0.8).finished();
  plant.B_p = (Matrix(2, 1) << 0, 1).finished();
  plant.E_p = (Matrix(2, 2) << 1, 0, 0, 0).finished();
  plant.C_p = (Matrix(1, 2) << 0.1, 0.5).finished();
  plant.F_p = (Matrix(1, 2) << 0, 2).finished();
  return plant;
}

inline ExoSystem example2_exo() {
  ExoSystem exo;
  exo.S = (Matrix(2, 2) << 0, 1, 0, 0).finished();
  return exo;
}

inline InternalModel example2_internal_model() {
  InternalModel im;
  im.G1 = (Matrix(2, 2) << 0, 1, 0, 0).finished();
  im.G2 = (Matrix(2, 1) << 2, -4).finished();
  im.K = (Matrix(1, 2) << 1, 0).finished();
  return im;
}

inline StabilizerParams example2_stabilizer() {
  StabilizerParams stab;
  stab.A_zeta = (Matrix(4, 4) <<
      0, 1, 25.42, 0,
      -37, -5.8, 32.31, -8.87,
      0.2, 1, -6.6, 1,
      -0.4, -2, -52.43, 0).finished();
  stab.B_zeta = (Matrix(4, 1) << -25.42, -24.81, 6.6, 52.43).finished();
  stab.C_zeta = (Matrix(1, 4) << -37.5, -6.6, 2.5, -8.87).finished();
  stab.D_zeta = (Matrix(1, 1) << 5).finished();
  return stab;
}

inline Matrix example2_Q() {
  return (Matrix(8, 1) << 67.41, 104.11, 191.66, 73.36, -4.05, 55.95, -41.84, 0.3543).finished();
}

inline Matrix example2_W() { return (Matrix(1, 1) << -2998.8).finished(); }

inline double example2_lambda() { return 4.5; }
inline double example2_gamma() { return 0.1; }

}  // namespace fixtures
