#pragma once

#include <optional>
#include <string>
#include <vector>

#include "peerscore/types.hpp"

namespace peerscore {

/// Ground-truth prior plus a shared confusion matrix. Two agents draw
/// signals independently given the latent truth.
struct DawidSkeneModel {
  std::vector<double> prior;  // length k
  RealMatrix confusion;       // k x c, row-stochastic

  std::size_t num_states() const { return prior.size(); }
  std::size_t num_signals() const { return confusion.cols(); }
  void validate() const;
};

/// Joint distribution of the two agents' signals on one question.
///
/// Immutable after construction; marginals and conditionals are derived once.
class InfoStructure {
 public:
  /// Validates entries (nonnegative, sum to one within kExactTol).
  explicit InfoStructure(RealMatrix joint);

  std::size_t num_signals() const { return joint_.rows(); }
  const RealMatrix& joint() const { return joint_; }
  double joint(int a, int b) const { return joint_(a, b); }
  const std::vector<double>& marginal_a() const { return marginal_a_; }
  const std::vector<double>& marginal_b() const { return marginal_b_; }

  /// p[i][j] = Pr(X_b = j | X_a = i). Throws if M^a[i] == 0.
  RealMatrix conditional_b_given_a() const;
  /// q[i][j] = Pr(X_a = i | X_b = j). Throws if M^b[j] == 0.
  RealMatrix conditional_a_given_b() const;

  /// M^a (x) M^b.
  RealMatrix product_of_marginals() const;
  bool symmetric(double tol = kExactTol) const;

  /// The generating model, when the structure was built from one.
  const std::optional<DawidSkeneModel>& source_model() const { return source_; }
  void set_source_model(DawidSkeneModel model) { source_ = std::move(model); }

 private:
  RealMatrix joint_;
  std::vector<double> marginal_a_;
  std::vector<double> marginal_b_;
  std::optional<DawidSkeneModel> source_;
};

struct DeltaMatrix {
  RealMatrix delta;      // J - M^a (x) M^b
  CountMatrix agreement; // 1 iff delta > 0
};

struct GammaTensor {
  std::size_t c = 0;
  std::vector<double> gamma;   // c*c*c, index (s1, s2, s3)
  std::vector<int> agreement;  // 1 iff gamma > 0

  double at(int s1, int s2, int s3) const { return gamma[index(s1, s2, s3)]; }
  int sign(int s1, int s2, int s3) const { return agreement[index(s1, s2, s3)]; }
  std::size_t index(int s1, int s2, int s3) const {
    return (static_cast<std::size_t>(s1) * c + static_cast<std::size_t>(s2)) * c +
           static_cast<std::size_t>(s3);
  }
};

struct SignalClass {
  bool self_dominating = false;
  bool self_predicting = false;
  bool uniformly_self_predicting = false;
};

InfoStructure joint_from_dawid_skene(const DawidSkeneModel& model);
DeltaMatrix delta_matrix(const InfoStructure& info);
GammaTensor gamma_tensor(const InfoStructure& info);
SignalClass classify(const InfoStructure& info);

/// Joint at effort e: e*J + (1-e)*M^a(x)M^b. Marginals do not move with e.
InfoStructure effort_mixture(const InfoStructure& info, double e);

/// Sign used by agreement tables: strict x > 0, no tolerance band.
inline int positive_sign(double x) { return x > 1e-12 ? 1 : 0; }

// Presets ------------------------------------------------------------------

struct Preset {
  std::string name;
  std::string description;
  InfoStructure info;
};

/// J1 (binary) and J2 (four signals) Dawid-Skene structures, plus the
/// regression structures used by the counterexample command.
const std::vector<Preset>& presets();
const InfoStructure& preset(const std::string& name);

}  // namespace peerscore
