#ifndef HSIM_NETMODEL_HPP
#define HSIM_NETMODEL_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hsim {

/// Raised when an engine is asked to perform a step that the model forbids
/// (e.g. firing a reaction that would drive a discrete count negative).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Network-text parse failure with 1-based source position.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column)
      : std::runtime_error(message + " (line " + std::to_string(line) +
                           ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

enum class SpeciesKind { continuous, discrete };

/// Reaction grouping requested in the network file. `automatic` defers to the
/// combinatorial-weight threshold at partition time.
enum class GroupHint { automatic, diffusion, jump };

struct Species {
  std::string name;
  SpeciesKind kind = SpeciesKind::discrete;
  double init = 0.0;

  bool operator==(const Species&) const = default;
};

struct Reaction {
  std::string id;
  std::vector<int> reactants;  // nu+ per species index
  std::vector<int> products;   // nu- per species index
  double rate_constant = 0.0;
  std::optional<std::string> rate_param;  // parameter name used in the source
  GroupHint hint = GroupHint::automatic;

  int net_change(std::size_t species) const {
    return products[species] - reactants[species];
  }
  bool operator==(const Reaction&) const = default;
};

/// Hybrid state: continuous counts x (one per continuous species, in
/// declaration order) and discrete counts sigma (likewise).
struct State {
  std::vector<double> x;
  std::vector<std::int64_t> sigma;
  double t = 0.0;

  bool operator==(const State&) const = default;
};

/// Immutable reaction network with precompiled mass-action tables. Safe to
/// share across threads once constructed.
class ReactionNetwork {
 public:
  ReactionNetwork() = default;  // empty network; fill via parse or from_parts

  /// Parses the line-oriented network DSL. See the README for the grammar.
  static ReactionNetwork parse(const std::string& text);

  /// Builds a network from already-assembled parts, running full validation.
  static ReactionNetwork from_parts(std::vector<Species> species,
                                    std::vector<Reaction> reactions,
                                    std::map<std::string, double> params);

  /// Writes the network back out in the same DSL; parse(serialize()) is the
  /// identity on the data model.
  std::string serialize() const;

  const std::vector<Species>& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const std::map<std::string, double>& params() const { return params_; }

  std::size_t species_index(std::string_view name) const;
  std::size_t reaction_index(std::string_view id) const;

  std::size_t continuous_count() const { return continuous_count_; }
  std::size_t discrete_count() const { return species_.size() - continuous_count_; }
  bool is_continuous(std::size_t species) const {
    return species_[species].kind == SpeciesKind::continuous;
  }
  /// Index of a species within State::x or State::sigma.
  std::size_t slot(std::size_t species) const { return slots_[species]; }

  /// Current copy number of a species (raw; may be negative for continuous
  /// components before clamping).
  double value(const State& s, std::size_t species) const {
    return is_continuous(species) ? s.x[slots_[species]]
                                  : static_cast<double>(s.sigma[slots_[species]]);
  }

  State initial_state() const;

  /// Number of distinct reactant combinations h_r(S). Discrete counts use the
  /// binomial count; continuous counts use the falling factorial over the
  /// reals divided by nu+!, clamped at zero so the weight is never negative.
  double combinatorial_weight(std::size_t reaction, const State& s) const;

  /// a_r(S) = k_r * h_r(S); continuous components are clamped to zero before
  /// evaluation.
  double propensity(std::size_t reaction, const State& s) const;

  /// Applies the full net stoichiometry of a reaction in place. Throws
  /// SimulationError("impossible event ...") if a discrete count would go
  /// negative; the state is left untouched in that case.
  void apply_stoichiometry(State& s, std::size_t reaction) const;

  /// True if the reaction's net stoichiometry changes any discrete species.
  bool touches_discrete(std::size_t reaction) const {
    return touches_discrete_[reaction];
  }

  struct SpeciesDelta {
    bool continuous;
    std::uint32_t slot;
    std::int32_t delta;
  };
  /// Nonzero net-change entries of a reaction, split by X/sigma membership.
  const std::vector<SpeciesDelta>& deltas(std::size_t reaction) const {
    return deltas_[reaction];
  }

  bool operator==(const ReactionNetwork& other) const {
    return species_ == other.species_ && reactions_ == other.reactions_ &&
           params_ == other.params_;
  }

 private:
  void compile();

  std::vector<Species> species_;
  std::vector<Reaction> reactions_;
  std::map<std::string, double> params_;

  std::size_t continuous_count_ = 0;
  std::vector<std::size_t> slots_;

  struct Factor {
    bool continuous;
    std::uint32_t slot;
    std::uint32_t order;
  };
  std::vector<std::vector<Factor>> factors_;
  std::vector<std::vector<SpeciesDelta>> deltas_;
  std::vector<bool> touches_discrete_;
};

/// Assignment of reactions to the diffusion set R1 and the ordered jump set
/// R_d. `jumps` keeps network declaration order, which fixes the
/// mark-interval layout. The X/sigma split of each reaction's stoichiometry
/// is available through ReactionNetwork::deltas.
struct Partition {
  std::vector<std::size_t> diffusion;  // R1
  std::vector<std::size_t> jumps;      // R_d

  bool is_diffusion(std::size_t reaction) const {
    for (std::size_t r : diffusion)
      if (r == reaction) return true;
    return false;
  }
};

/// Splits reactions by hint, falling back for `automatic` reactions to
/// h_r(probe) >= h_threshold with no discrete change. Any reaction that
/// changes a discrete species jumps, regardless of its weight; hinting such a
/// reaction `diffusion` is an error.
Partition partition_reactions(const ReactionNetwork& net, double h_threshold,
                              const State& probe);

struct ValidityRow {
  std::size_t reaction;
  double h_value;
  bool pass;
};

/// Reports h_r(s) for every diffusion reaction and flags h_r(s) < h_min.
/// Pure diagnostic.
std::vector<ValidityRow> diffusion_validity(const ReactionNetwork& net,
                                            const Partition& partition,
                                            const State& s, double h_min);

}  // namespace hsim

#endif  // HSIM_NETMODEL_HPP
