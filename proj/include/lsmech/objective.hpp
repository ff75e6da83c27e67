#pragma once

#include "lsmech/fem.hpp"
#include "lsmech/levelset.hpp"
#include "lsmech/mesh.hpp"

namespace lsmech {

// How the ascent direction treats a negative numerator W + alpha. Ratio
// follows J exactly, which then rewards a softer input port. Product ascends
// (W + alpha)(E + beta) instead (rescaled by 1/(E + beta)^2), which agrees
// with J wherever W + alpha >= 0.
enum class NegativeNumerator { Ratio, Product };

struct ObjectiveParams {
  double alpha = 1.0;
  double beta = 0.0;
  NegativeNumerator negative_numerator = NegativeNumerator::Product;
  void validate() const;
  bool operator==(const ObjectiveParams&) const = default;
};

// Output and input normalizers, frozen from the initial full-material state.
struct Normalization {
  double W_bar = 1.0;  // integral over the output port of |e . U_out|
  double E_bar = 1.0;  // integral over the input port of |t . U_in|
};

// Trapezoidal integral of vector . u along the edges carrying `tag`.
double port_integral(const Mesh& mesh, BoundaryTag tag, const Vec2& vector, const FieldVector& u);
// Trapezoidal integral of |vector . u| along the edges carrying `tag`.
double port_abs_integral(const Mesh& mesh, BoundaryTag tag, const Vec2& vector, const FieldVector& u);

Normalization init_normalization(const FieldVector& u0, const Mesh& mesh, const LoadSpec& loads);

double compute_W(const FieldVector& u, const Mesh& mesh, const LoadSpec& loads, const Normalization& norm);
double compute_E(const FieldVector& u, const Mesh& mesh, const LoadSpec& loads, const Normalization& norm);
// J = (W + alpha) / (E + beta); throws when the denominator vanishes.
double compute_J(double W, double E, const ObjectiveParams& params);

struct PortDisplacements {
  double U_o = 0.0;  // output-port measure of e . u (see PortMeasure)
  double U_i = 0.0;  // traction-weighted mean input displacement
};

// How U_o is reported. Integral is the literal port integral of e . u over
// the modelled output port; Mean divides it by the port length.
enum class PortMeasure { Integral, Mean };

// `mirror` multiplies port integrals so a symmetric half model reports
// full-domain values (2 for a half model, 1 otherwise).
PortDisplacements evaluation_displacements(const FieldVector& u, const Mesh& mesh, const LoadSpec& loads,
                                           PortMeasure measure = PortMeasure::Mean, double mirror = 1.0);

double volume_fraction(const Mesh& mesh, const LevelSetField& phi, const HeavisideParams& heaviside);
double volume_fraction(const Mesh& mesh, std::span<const double> element_density);

// External work of the input traction, per unit thickness.
double mean_compliance(const FieldVector& u, const Mesh& mesh, const LoadSpec& loads);

// True when material elements (density >= h(0)) link the input port to the
// fixed boundary through shared nodes.
bool input_connected_to_support(const Mesh& mesh, std::span<const double> element_density,
                                double material_threshold);

}  // namespace lsmech
