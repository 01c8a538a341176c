#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "netmodel.hpp"
#include "rng.hpp"

using namespace hsim;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

ReactionNetwork gene_burst() {
  return ReactionNetwork::parse(
      read_file(std::string(HSIM_NETWORKS_DIR) + "/gene_burst.rxn"));
}

// State helper for networks whose species are declared in a known order.
State make_state(const ReactionNetwork& net, const std::vector<double>& values) {
  State s = net.initial_state();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (net.is_continuous(i))
      s.x[net.slot(i)] = values[i];
    else
      s.sigma[net.slot(i)] = static_cast<std::int64_t>(values[i]);
  }
  return s;
}

// Brute-force count of distinct reactant combinations by direct enumeration
// over molecule indices; the independent oracle for combinatorial weights.
std::int64_t count_combinations(const std::vector<std::pair<std::int64_t, int>>& terms) {
  std::int64_t count = 1;
  for (const auto& [n, order] : terms) {
    if (order == 0) continue;
    if (order == 1) {
      count *= n;
    } else if (order == 2) {
      std::int64_t pairs = 0;
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = i + 1; j < n; ++j) ++pairs;
      count *= pairs;
    } else {
      FAIL("oracle only covers orders 1 and 2");
    }
    if (count == 0) return 0;
  }
  return count;
}

}  // namespace

TEST_CASE("parse: minimal single-reaction network") {
  const auto net =
      ReactionNetwork::parse("species A discrete init=1\nreaction r1: A -> 0 rate=2.0");
  REQUIRE(net.species().size() == 1);
  REQUIRE(net.reactions().size() == 1);
  CHECK(net.species()[0].name == "A");
  CHECK(net.species()[0].kind == SpeciesKind::discrete);
  CHECK(net.reactions()[0].rate_constant == 2.0);
  CHECK(net.reactions()[0].net_change(0) == -1);
}

TEST_CASE("parse: gene-burst example file") {
  const auto net = gene_burst();
  REQUIRE(net.species().size() == 4);
  REQUIRE(net.reactions().size() == 5);
  CHECK(net.species()[0].kind == SpeciesKind::discrete);
  CHECK(net.species()[1].kind == SpeciesKind::discrete);
  CHECK(net.species()[2].kind == SpeciesKind::continuous);
  CHECK(net.species()[3].kind == SpeciesKind::continuous);
  CHECK(net.species()[2].init == 1000.0);
  CHECK(net.species()[3].init == 200.0);

  const std::vector<double> k{0.5, 0.5, 1.0, 0.1, 0.01};
  for (std::size_t r = 0; r < 5; ++r)
    CHECK(net.reactions()[r].rate_constant == k[r]);

  // burst reaction: S1 -> S1 + 5 S3, net change (0,0,+5,0)
  const auto& r3 = net.reactions()[net.reaction_index("r3")];
  CHECK(r3.net_change(0) == 0);
  CHECK(r3.net_change(1) == 0);
  CHECK(r3.net_change(2) == 5);
  CHECK(r3.net_change(3) == 0);
}

TEST_CASE("parse: errors carry position and cause") {
  SUBCASE("undeclared species") {
    try {
      ReactionNetwork::parse("species A discrete init=1\nreaction r: A -> B rate=1");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("undeclared species B") != std::string::npos);
      CHECK(e.line() == 2);
      CHECK(e.column() > 0);
    }
  }
  SUBCASE("negative rate") {
    CHECK_THROWS_AS(
        ReactionNetwork::parse("species A discrete init=1\nreaction r: A -> 0 rate=-1"),
        ParseError);
  }
  SUBCASE("negative init") {
    CHECK_THROWS_AS(ReactionNetwork::parse("species A discrete init=-2"), ParseError);
  }
  SUBCASE("non-integer init for discrete species") {
    CHECK_THROWS_AS(ReactionNetwork::parse("species A discrete init=1.5"), ParseError);
  }
  SUBCASE("continuous init may be fractional") {
    CHECK_NOTHROW(ReactionNetwork::parse("species A continuous init=1.5"));
  }
  SUBCASE("duplicate reaction id") {
    CHECK_THROWS_AS(ReactionNetwork::parse("species A discrete init=1\n"
                                           "reaction r: A -> 0 rate=1\n"
                                           "reaction r: A -> 0 rate=2"),
                    ParseError);
  }
  SUBCASE("duplicate species") {
    CHECK_THROWS_AS(ReactionNetwork::parse("species A discrete init=1\n"
                                           "species A discrete init=2"),
                    ParseError);
  }
  SUBCASE("unknown keyword") {
    CHECK_THROWS_AS(ReactionNetwork::parse("speces A discrete init=1"), ParseError);
  }
  SUBCASE("missing rate") {
    CHECK_THROWS_AS(ReactionNetwork::parse("species A discrete init=1\n"
                                           "reaction r: A -> 0"),
                    ParseError);
  }
  SUBCASE("empty reaction") {
    CHECK_THROWS_AS(ReactionNetwork::parse("reaction r: 0 -> 0 rate=1"), ParseError);
  }
  SUBCASE("unknown rate parameter") {
    CHECK_THROWS_AS(ReactionNetwork::parse("species A discrete init=1\n"
                                           "reaction r: A -> 0 rate=nope"),
                    ParseError);
  }
}

TEST_CASE("combinatorial weight: first- and second-order examples") {
  const auto net = ReactionNetwork::parse(
      "species S1 discrete init=0\nspecies S2 discrete init=0\n"
      "reaction u: S1 -> S2 rate=1\nreaction b: 2 S2 -> 0 rate=1");
  CHECK(net.combinatorial_weight(0, make_state(net, {7, 0})) == 7.0);
  CHECK(net.combinatorial_weight(1, make_state(net, {0, 5})) == 10.0);
  CHECK(net.combinatorial_weight(1, make_state(net, {0, 1})) == 0.0);
}

TEST_CASE("combinatorial weight: equals exhaustive combination counting") {
  const auto net = ReactionNetwork::parse(
      "species A discrete init=0\nspecies B discrete init=0\n"
      "reaction first: A -> 0 rate=1\n"
      "reaction pair: 2 A -> 0 rate=1\n"
      "reaction cross: A + B -> 0 rate=1");
  for (std::int64_t a = 0; a <= 20; ++a) {
    for (std::int64_t b = 0; b <= 20; ++b) {
      const State s = make_state(net, {double(a), double(b)});
      CHECK(net.combinatorial_weight(0, s) == double(count_combinations({{a, 1}})));
      CHECK(net.combinatorial_weight(1, s) == double(count_combinations({{a, 2}})));
      CHECK(net.combinatorial_weight(2, s) ==
            double(count_combinations({{a, 1}, {b, 1}})));
    }
  }
}

TEST_CASE("combinatorial weight: falling factorial on continuous species") {
  const auto net = ReactionNetwork::parse(
      "species X continuous init=0\nreaction pair: 2 X -> 0 rate=1");
  // matches the integer formula at integral values
  CHECK(net.combinatorial_weight(0, make_state(net, {5})) == 10.0);
  CHECK(net.combinatorial_weight(0, make_state(net, {1})) == 0.0);
  CHECK(net.combinatorial_weight(0, make_state(net, {0})) == 0.0);
  // real-valued in between, clamped at zero where the product dips negative
  CHECK(net.combinatorial_weight(0, make_state(net, {2.5})) ==
        doctest::Approx(2.5 * 1.5 / 2).epsilon(1e-12));
  CHECK(net.combinatorial_weight(0, make_state(net, {0.5})) == 0.0);
  // negative values are clamped to zero before evaluation
  CHECK(net.combinatorial_weight(0, make_state(net, {-3.0})) == 0.0);
}

TEST_CASE("propensity: gene-burst values") {
  const auto net = gene_burst();
  // a4 = k4 * sigma2 * X1 at sigma2=1, X1=1000
  const State s = make_state(net, {0, 1, 1000, 200});
  CHECK(net.propensity(net.reaction_index("r4"), s) == doctest::Approx(100.0));
  CHECK(net.propensity(net.reaction_index("r5"), s) == doctest::Approx(2.0));
  // zero state kills every propensity
  const State zero = make_state(net, {0, 0, 0, 0});
  for (std::size_t r = 0; r < net.reactions().size(); ++r)
    CHECK(net.propensity(r, zero) == 0.0);
}

TEST_CASE("propensity: never negative, zero below stoichiometric requirement") {
  const auto net = ReactionNetwork::parse(
      "species A discrete init=0\nspecies X continuous init=0\n"
      "reaction two_a: 2 A -> 0 rate=3\nreaction two_x: 2 X -> 0 rate=3");
  for (double v : {0.0, 0.3, 1.0, 1.7, 2.0, 25.0}) {
    const State s = make_state(net, {std::floor(v), v});
    CHECK(net.propensity(0, s) >= 0.0);
    CHECK(net.propensity(1, s) >= 0.0);
  }
  CHECK(net.propensity(0, make_state(net, {1, 0})) == 0.0);
}

TEST_CASE("apply_stoichiometry: gene-burst examples and the impossible event") {
  const auto net = gene_burst();
  State s = make_state(net, {1, 0, 1000, 200});
  net.apply_stoichiometry(s, net.reaction_index("r1"));
  CHECK(s == make_state(net, {0, 1, 1000, 200}));

  State s2 = make_state(net, {1, 0, 1000, 200});
  net.apply_stoichiometry(s2, net.reaction_index("r3"));
  CHECK(s2 == make_state(net, {1, 0, 1005, 200}));

  // firing A->0 at A=0 must fail and leave the state untouched
  const auto tiny =
      ReactionNetwork::parse("species A discrete init=0\nreaction r: A -> 0 rate=1");
  State empty = tiny.initial_state();
  CHECK_THROWS_WITH_AS(tiny.apply_stoichiometry(empty, 0),
                       doctest::Contains("impossible event"), SimulationError);
  CHECK(empty == tiny.initial_state());
}

TEST_CASE("apply_stoichiometry: conserves linear invariants of the network") {
  const auto net = gene_burst();
  // L = (1,1,0,0): sigma1 + sigma2 is untouched by every reaction
  for (std::size_t r = 0; r < net.reactions().size(); ++r) {
    State s = make_state(net, {1, 0, 1000, 200});
    const double before = net.value(s, 0) + net.value(s, 1);
    if (net.reactions()[r].id == "r2") continue;  // would need sigma2 > 0
    net.apply_stoichiometry(s, r);
    CHECK(net.value(s, 0) + net.value(s, 1) == before);
  }
}

TEST_CASE("partition: gene-burst file lands on R1={r4,r5}") {
  const auto net = gene_burst();
  const auto part = partition_reactions(net, 100.0, net.initial_state());
  REQUIRE(part.diffusion.size() == 2);
  REQUIRE(part.jumps.size() == 3);
  CHECK(net.reactions()[part.diffusion[0]].id == "r4");
  CHECK(net.reactions()[part.diffusion[1]].id == "r5");
  CHECK(net.reactions()[part.jumps[0]].id == "r1");
  CHECK(net.reactions()[part.jumps[1]].id == "r2");
  CHECK(net.reactions()[part.jumps[2]].id == "r3");
}

TEST_CASE("partition: auto rule uses the probe weight and the discrete guard") {
  const auto net = ReactionNetwork::parse(
      "species G discrete init=0\nspecies X continuous init=1000\n"
      "reaction convert: G + X -> G rate=1\n"
      "reaction decay: X -> 0 rate=1");
  // at the probe G=0 the weight of `convert` is 0: both hints are auto, only
  // `decay` clears the threshold
  const auto p0 = partition_reactions(net, 100.0, net.initial_state());
  CHECK(p0.diffusion == std::vector<std::size_t>{1});
  CHECK(p0.jumps == std::vector<std::size_t>{0});
  // with G=1 the weight is 1000 and `convert` diffuses too
  const auto p1 = partition_reactions(net, 100.0, make_state(net, {1, 1000}));
  CHECK(p1.diffusion == std::vector<std::size_t>{0, 1});
  CHECK(p1.jumps.empty());
}

TEST_CASE("partition: a reaction changing a discrete species always jumps") {
  const auto net =
      ReactionNetwork::parse("species A discrete init=1000000\nreaction r: A -> 0 rate=1");
  const auto part = partition_reactions(net, 10.0, net.initial_state());
  CHECK(part.diffusion.empty());
  CHECK(part.jumps == std::vector<std::size_t>{0});
}

TEST_CASE("partition: all-continuous network above threshold is pure diffusion") {
  const auto net = ReactionNetwork::parse(
      "species X continuous init=1000\nspecies Y continuous init=1000\n"
      "reaction a: X -> Y rate=1\nreaction b: Y -> X rate=1");
  const auto part = partition_reactions(net, 100.0, net.initial_state());
  CHECK(part.jumps.empty());
  CHECK(part.diffusion == std::vector<std::size_t>{0, 1});
}

TEST_CASE("partition: diffusion hint on a discrete-changing reaction is an error") {
  const auto net = ReactionNetwork::parse(
      "species A discrete init=5\nreaction r: A -> 0 rate=1 group=diffusion");
  CHECK_THROWS_AS(partition_reactions(net, 1.0, net.initial_state()),
                  std::invalid_argument);
}

TEST_CASE("partition: covers every reaction exactly once") {
  const auto net = gene_burst();
  for (double threshold : {1.0, 50.0, 100.0, 1e6}) {
    const auto part = partition_reactions(net, threshold, net.initial_state());
    std::set<std::size_t> seen;
    for (std::size_t r : part.diffusion) CHECK(seen.insert(r).second);
    for (std::size_t r : part.jumps) CHECK(seen.insert(r).second);
    CHECK(seen.size() == net.reactions().size());
  }
}

TEST_CASE("diffusion_validity: gene-burst at the initial state") {
  const auto net = gene_burst();
  const auto part = partition_reactions(net, 100.0, net.initial_state());
  const auto rows = diffusion_validity(net, part, net.initial_state(), 50.0);
  REQUIRE(rows.size() == 2);
  // r4: h = sigma2 * X1 = 0 at the initial state -> flagged
  CHECK(net.reactions()[rows[0].reaction].id == "r4");
  CHECK(rows[0].h_value == 0.0);
  CHECK_FALSE(rows[0].pass);
  // r5: h = X2 = 200 -> pass
  CHECK(net.reactions()[rows[1].reaction].id == "r5");
  CHECK(rows[1].h_value == 200.0);
  CHECK(rows[1].pass);
}

TEST_CASE("diffusion_validity: empty R1 gives an empty report") {
  const auto net =
      ReactionNetwork::parse("species A discrete init=1\nreaction r: A -> 0 rate=1");
  const auto part = partition_reactions(net, 1.0, net.initial_state());
  CHECK(diffusion_validity(net, part, net.initial_state(), 50.0).empty());
}

TEST_CASE("serialize/parse round-trip: bundled networks") {
  for (const char* name : {"/gene_burst.rxn", "/flip_flop.rxn",
                           "/balanced_branching.rxn", "/quadratic_decay.rxn",
                           "/birth_death.rxn"}) {
    const auto net =
        ReactionNetwork::parse(read_file(std::string(HSIM_NETWORKS_DIR) + name));
    const auto again = ReactionNetwork::parse(net.serialize());
    CHECK(net == again);
  }
}

TEST_CASE("serialize/parse round-trip: randomized networks") {
  Rng rng(20240817);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n_species = 1 + static_cast<std::size_t>(rng.uniform01() * 4);
    std::vector<Species> species;
    for (std::size_t i = 0; i < n_species; ++i) {
      Species sp;
      sp.name = "S" + std::to_string(i);
      sp.kind = rng.uniform01() < 0.5 ? SpeciesKind::discrete : SpeciesKind::continuous;
      sp.init = std::floor(rng.uniform01() * 50);
      species.push_back(sp);
    }
    const std::size_t n_rx = 1 + static_cast<std::size_t>(rng.uniform01() * 5);
    std::vector<Reaction> reactions;
    for (std::size_t r = 0; r < n_rx; ++r) {
      Reaction rx;
      rx.id = "r" + std::to_string(r);
      rx.reactants.assign(n_species, 0);
      rx.products.assign(n_species, 0);
      for (std::size_t i = 0; i < n_species; ++i) {
        rx.reactants[i] = static_cast<int>(rng.uniform01() * 3);
        rx.products[i] = static_cast<int>(rng.uniform01() * 3);
      }
      if (rx.reactants == rx.products && rx.reactants == std::vector<int>(n_species, 0))
        rx.products[0] = 1;
      rx.rate_constant = std::floor(rng.uniform01() * 4096) / 1024.0;
      const double u = rng.uniform01();
      rx.hint = u < 0.6 ? GroupHint::automatic
                        : (u < 0.8 ? GroupHint::diffusion : GroupHint::jump);
      reactions.push_back(rx);
    }
    const auto net =
        ReactionNetwork::from_parts(species, reactions, {{"kappa", 0.125}});
    const auto again = ReactionNetwork::parse(net.serialize());
    CHECK(net == again);
  }
}

TEST_CASE("parse: rate by parameter is substituted and survives round-trips") {
  const auto net = ReactionNetwork::parse(
      "param k=0.25\nspecies A discrete init=1\nreaction r: A -> 0 rate=k");
  CHECK(net.reactions()[0].rate_constant == 0.25);
  REQUIRE(net.reactions()[0].rate_param.has_value());
  const auto again = ReactionNetwork::parse(net.serialize());
  CHECK(net == again);
}
