#include "netmodel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hsim {

namespace {

// %.10g, upgraded to %.17g when 10 significant digits would not round-trip.
std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Token {
  std::string text;
  int column;  // 1-based
};

std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    if (line[i] == '#') break;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
           line[i] != '#')
      ++i;
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

bool parse_double(std::string_view text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_positive_int(std::string_view text, int& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && out > 0;
}

bool is_identifier(std::string_view text) {
  if (text.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(text[0])) && text[0] != '_')
    return false;
  return std::all_of(text.begin(), text.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

// Splits "key=value"; returns false if '=' is missing.
bool split_kv(const std::string& token, std::string& key, std::string& value) {
  const auto pos = token.find('=');
  if (pos == std::string::npos) return false;
  key = token.substr(0, pos);
  value = token.substr(pos + 1);
  return true;
}

struct TermList {
  // species index -> total coefficient
  std::map<std::size_t, int> coefficients;
};

}  // namespace

std::size_t ReactionNetwork::species_index(std::string_view name) const {
  for (std::size_t i = 0; i < species_.size(); ++i)
    if (species_[i].name == name) return i;
  throw std::invalid_argument("unknown species " + std::string(name));
}

std::size_t ReactionNetwork::reaction_index(std::string_view id) const {
  for (std::size_t i = 0; i < reactions_.size(); ++i)
    if (reactions_[i].id == id) return i;
  throw std::invalid_argument("unknown reaction " + std::string(id));
}

State ReactionNetwork::initial_state() const {
  State s;
  s.x.resize(continuous_count_);
  s.sigma.resize(discrete_count());
  for (std::size_t i = 0; i < species_.size(); ++i) {
    if (is_continuous(i))
      s.x[slots_[i]] = species_[i].init;
    else
      s.sigma[slots_[i]] = static_cast<std::int64_t>(std::llround(species_[i].init));
  }
  s.t = 0.0;
  return s;
}

void ReactionNetwork::compile() {
  continuous_count_ = 0;
  slots_.assign(species_.size(), 0);
  std::size_t cslot = 0, dslot = 0;
  for (std::size_t i = 0; i < species_.size(); ++i) {
    if (species_[i].kind == SpeciesKind::continuous) {
      slots_[i] = cslot++;
    } else {
      slots_[i] = dslot++;
    }
  }
  continuous_count_ = cslot;

  factors_.assign(reactions_.size(), {});
  deltas_.assign(reactions_.size(), {});
  touches_discrete_.assign(reactions_.size(), false);
  for (std::size_t r = 0; r < reactions_.size(); ++r) {
    for (std::size_t i = 0; i < species_.size(); ++i) {
      const int order = reactions_[r].reactants[i];
      if (order > 0)
        factors_[r].push_back({is_continuous(i), static_cast<std::uint32_t>(slots_[i]),
                               static_cast<std::uint32_t>(order)});
      const int delta = reactions_[r].net_change(i);
      if (delta != 0) {
        deltas_[r].push_back({is_continuous(i), static_cast<std::uint32_t>(slots_[i]),
                              static_cast<std::int32_t>(delta)});
        if (!is_continuous(i)) touches_discrete_[r] = true;
      }
    }
  }
}

ReactionNetwork ReactionNetwork::from_parts(std::vector<Species> species,
                                            std::vector<Reaction> reactions,
                                            std::map<std::string, double> params) {
  for (std::size_t i = 0; i < species.size(); ++i) {
    const Species& sp = species[i];
    if (!is_identifier(sp.name))
      throw std::invalid_argument("invalid species name '" + sp.name + "'");
    if (sp.init < 0)
      throw std::invalid_argument("negative init for species " + sp.name);
    if (sp.kind == SpeciesKind::discrete &&
        sp.init != std::floor(sp.init))
      throw std::invalid_argument("non-integer init for discrete species " + sp.name);
    for (std::size_t j = i + 1; j < species.size(); ++j)
      if (species[j].name == sp.name)
        throw std::invalid_argument("duplicate species " + sp.name);
  }
  for (std::size_t r = 0; r < reactions.size(); ++r) {
    const Reaction& rx = reactions[r];
    if (!is_identifier(rx.id))
      throw std::invalid_argument("invalid reaction id '" + rx.id + "'");
    if (rx.reactants.size() != species.size() || rx.products.size() != species.size())
      throw std::invalid_argument("stoichiometry size mismatch in reaction " + rx.id);
    if (rx.rate_constant < 0)
      throw std::invalid_argument("negative rate in reaction " + rx.id);
    const bool lhs_empty =
        std::all_of(rx.reactants.begin(), rx.reactants.end(), [](int c) { return c == 0; });
    const bool rhs_empty =
        std::all_of(rx.products.begin(), rx.products.end(), [](int c) { return c == 0; });
    if (lhs_empty && rhs_empty)
      throw std::invalid_argument("reaction " + rx.id + " has no species");
    for (std::size_t q = r + 1; q < reactions.size(); ++q)
      if (reactions[q].id == rx.id)
        throw std::invalid_argument("duplicate reaction id " + rx.id);
  }
  ReactionNetwork net;
  net.species_ = std::move(species);
  net.reactions_ = std::move(reactions);
  net.params_ = std::move(params);
  net.compile();
  return net;
}

ReactionNetwork ReactionNetwork::parse(const std::string& text) {
  std::vector<Species> species;
  std::vector<Reaction> reactions;
  std::map<std::string, double> params;

  std::vector<std::pair<int, std::vector<Token>>> lines;  // (line number, tokens)
  {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto toks = tokenize(line);
      if (!toks.empty()) lines.emplace_back(lineno, std::move(toks));
    }
  }

  auto find_species = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < species.size(); ++i)
      if (species[i].name == name) return i;
    return std::nullopt;
  };

  // Pass 1: params and species, so declaration order does not matter for
  // reactions.
  for (const auto& [lineno, toks] : lines) {
    const std::string& kw = toks[0].text;
    if (kw == "param") {
      if (toks.size() != 2)
        throw ParseError("expected 'param <name>=<float>'", lineno, toks[0].column);
      std::string key, value;
      if (!split_kv(toks[1].text, key, value) || !is_identifier(key))
        throw ParseError("expected 'param <name>=<float>'", lineno, toks[1].column);
      double v;
      if (!parse_double(value, v))
        throw ParseError("invalid parameter value '" + value + "'", lineno,
                         toks[1].column);
      if (params.count(key))
        throw ParseError("duplicate parameter " + key, lineno, toks[1].column);
      params[key] = v;
    } else if (kw == "species") {
      if (toks.size() != 4)
        throw ParseError("expected 'species <name> <discrete|continuous> init=<number>'",
                         lineno, toks[0].column);
      Species sp;
      sp.name = toks[1].text;
      if (!is_identifier(sp.name))
        throw ParseError("invalid species name '" + sp.name + "'", lineno,
                         toks[1].column);
      if (toks[2].text == "discrete")
        sp.kind = SpeciesKind::discrete;
      else if (toks[2].text == "continuous")
        sp.kind = SpeciesKind::continuous;
      else
        throw ParseError("species kind must be 'discrete' or 'continuous'", lineno,
                         toks[2].column);
      std::string key, value;
      if (!split_kv(toks[3].text, key, value) || key != "init")
        throw ParseError("expected init=<number>", lineno, toks[3].column);
      if (!parse_double(value, sp.init))
        throw ParseError("invalid init value '" + value + "'", lineno, toks[3].column);
      if (sp.init < 0)
        throw ParseError("negative init for species " + sp.name, lineno,
                         toks[3].column);
      if (sp.kind == SpeciesKind::discrete && sp.init != std::floor(sp.init))
        throw ParseError("non-integer init for discrete species " + sp.name, lineno,
                         toks[3].column);
      if (find_species(sp.name))
        throw ParseError("duplicate species " + sp.name, lineno, toks[1].column);
      species.push_back(std::move(sp));
    } else if (kw != "reaction") {
      throw ParseError("unknown keyword '" + kw + "'", lineno, toks[0].column);
    }
  }

  // Pass 2: reactions.
  for (const auto& [lineno, toks] : lines) {
    if (toks[0].text != "reaction") continue;
    std::size_t pos = 1;
    if (pos >= toks.size())
      throw ParseError("expected reaction id", lineno, toks[0].column);
    std::string id = toks[pos].text;
    int id_col = toks[pos].column;
    if (!id.empty() && id.back() == ':') {
      id.pop_back();
      ++pos;
    } else if (pos + 1 < toks.size() && toks[pos + 1].text == ":") {
      pos += 2;
    } else {
      throw ParseError("expected ':' after reaction id", lineno, toks[pos].column);
    }
    if (!is_identifier(id))
      throw ParseError("invalid reaction id '" + id + "'", lineno, id_col);

    // Collect a term list up to a stop token ("->" for the left side, a
    // key=value token for the right side).
    auto parse_side = [&](std::size_t& p, bool lhs) -> TermList {
      TermList terms;
      bool expect_term = true;
      auto at_stop = [&]() {
        if (p >= toks.size()) return true;
        if (lhs) return toks[p].text == "->";
        return toks[p].text.find('=') != std::string::npos;
      };
      if (!at_stop() && toks[p].text == "0") {
        ++p;
        return terms;  // explicit empty side
      }
      while (!at_stop()) {
        const Token& tk = toks[p];
        if (tk.text == "+") {
          if (expect_term)
            throw ParseError("unexpected '+'", lineno, tk.column);
          expect_term = true;
          ++p;
          continue;
        }
        if (!expect_term)
          throw ParseError("expected '+' between terms", lineno, tk.column);
        int coeff = 1;
        std::string name = tk.text;
        int name_col = tk.column;
        if (int c; parse_positive_int(tk.text, c)) {
          coeff = c;
          ++p;
          if (at_stop())
            throw ParseError("expected species name after coefficient", lineno,
                             tk.column);
          name = toks[p].text;
          name_col = toks[p].column;
        }
        auto idx = find_species(name);
        if (!idx)
          throw ParseError("undeclared species " + name, lineno, name_col);
        terms.coefficients[*idx] += coeff;
        expect_term = false;
        ++p;
      }
      if (expect_term)
        throw ParseError(lhs ? "empty reactant side (use '0')"
                             : "empty product side (use '0')",
                         lineno, p < toks.size() ? toks[p].column : 1);
      return terms;
    };

    const TermList lhs = parse_side(pos, true);
    if (pos >= toks.size() || toks[pos].text != "->")
      throw ParseError("expected '->'", lineno,
                       pos < toks.size() ? toks[pos].column : 1);
    ++pos;
    const TermList rhs = parse_side(pos, false);

    Reaction rx;
    rx.id = id;
    rx.reactants.assign(species.size(), 0);
    rx.products.assign(species.size(), 0);
    for (const auto& [i, c] : lhs.coefficients) rx.reactants[i] = c;
    for (const auto& [i, c] : rhs.coefficients) rx.products[i] = c;

    bool have_rate = false;
    for (; pos < toks.size(); ++pos) {
      std::string key, value;
      if (!split_kv(toks[pos].text, key, value))
        throw ParseError("expected key=value option, got '" + toks[pos].text + "'",
                         lineno, toks[pos].column);
      if (key == "rate") {
        double v;
        if (parse_double(value, v)) {
          rx.rate_constant = v;
        } else if (params.count(value)) {
          rx.rate_constant = params.at(value);
          rx.rate_param = value;
        } else {
          throw ParseError("rate must be a number or a declared parameter, got '" +
                               value + "'",
                           lineno, toks[pos].column);
        }
        if (rx.rate_constant < 0)
          throw ParseError("negative rate in reaction " + id, lineno,
                           toks[pos].column);
        have_rate = true;
      } else if (key == "group") {
        if (value == "auto")
          rx.hint = GroupHint::automatic;
        else if (value == "diffusion")
          rx.hint = GroupHint::diffusion;
        else if (value == "jump")
          rx.hint = GroupHint::jump;
        else
          throw ParseError("group must be auto|diffusion|jump", lineno,
                           toks[pos].column);
      } else {
        throw ParseError("unknown option '" + key + "'", lineno, toks[pos].column);
      }
    }
    if (!have_rate)
      throw ParseError("reaction " + id + " is missing rate=", lineno, id_col);
    if (lhs.coefficients.empty() && rhs.coefficients.empty())
      throw ParseError("reaction " + id + " has no species", lineno, id_col);
    for (const Reaction& prev : reactions)
      if (prev.id == id)
        throw ParseError("duplicate reaction id " + id, lineno, id_col);
    reactions.push_back(std::move(rx));
  }

  return from_parts(std::move(species), std::move(reactions), std::move(params));
}

std::string ReactionNetwork::serialize() const {
  std::ostringstream out;
  for (const auto& [name, value] : params_)
    out << "param " << name << "=" << format_number(value) << "\n";
  for (const Species& sp : species_)
    out << "species " << sp.name << " "
        << (sp.kind == SpeciesKind::discrete ? "discrete" : "continuous")
        << " init=" << format_number(sp.init) << "\n";
  auto side = [&](const std::vector<int>& coeffs) {
    std::string s;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      if (coeffs[i] == 0) continue;
      if (!s.empty()) s += " + ";
      if (coeffs[i] > 1) s += std::to_string(coeffs[i]) + " ";
      s += species_[i].name;
    }
    return s.empty() ? std::string("0") : s;
  };
  for (const Reaction& rx : reactions_) {
    out << "reaction " << rx.id << ": " << side(rx.reactants) << " -> "
        << side(rx.products) << " rate="
        << (rx.rate_param ? *rx.rate_param : format_number(rx.rate_constant));
    if (rx.hint == GroupHint::diffusion) out << " group=diffusion";
    if (rx.hint == GroupHint::jump) out << " group=jump";
    out << "\n";
  }
  return out.str();
}

double ReactionNetwork::combinatorial_weight(std::size_t reaction,
                                             const State& s) const {
  double w = 1.0;
  for (const Factor& f : factors_[reaction]) {
    if (f.continuous) {
      // Falling factorial over the reals / order!; equals the binomial count
      // at integral values, clamped at zero in between.
      const double v = std::max(s.x[f.slot], 0.0);
      double part = 1.0;
      for (std::uint32_t j = 0; j < f.order; ++j) part *= (v - j) / (j + 1);
      if (part <= 0.0) return 0.0;
      w *= part;
    } else {
      const std::int64_t n = s.sigma[f.slot];
      if (n < static_cast<std::int64_t>(f.order)) return 0.0;
      double part = 1.0;
      for (std::uint32_t j = 0; j < f.order; ++j)
        part *= static_cast<double>(n - j) / (j + 1);
      w *= part;
    }
  }
  return w;
}

double ReactionNetwork::propensity(std::size_t reaction, const State& s) const {
  const double k = reactions_[reaction].rate_constant;
  if (k == 0.0) return 0.0;
  return k * combinatorial_weight(reaction, s);
}

void ReactionNetwork::apply_stoichiometry(State& s, std::size_t reaction) const {
  const auto& ds = deltas_[reaction];
  for (const SpeciesDelta& d : ds) {
    if (!d.continuous && s.sigma[d.slot] + d.delta < 0)
      throw SimulationError("impossible event: reaction " + reactions_[reaction].id +
                            " would make a discrete count negative");
  }
  for (const SpeciesDelta& d : ds) {
    if (d.continuous)
      s.x[d.slot] += d.delta;
    else
      s.sigma[d.slot] += d.delta;
  }
}

Partition partition_reactions(const ReactionNetwork& net, double h_threshold,
                              const State& probe) {
  if (!(h_threshold > 0))
    throw std::invalid_argument("h_threshold must be positive");
  Partition part;
  for (std::size_t r = 0; r < net.reactions().size(); ++r) {
    const Reaction& rx = net.reactions()[r];
    bool diffusion = false;
    switch (rx.hint) {
      case GroupHint::diffusion:
        if (net.touches_discrete(r))
          throw std::invalid_argument(
              "reaction " + rx.id +
              " is hinted 'diffusion' but changes a discrete species");
        diffusion = true;
        break;
      case GroupHint::jump:
        diffusion = false;
        break;
      case GroupHint::automatic:
        diffusion = !net.touches_discrete(r) &&
                    net.combinatorial_weight(r, probe) >= h_threshold;
        break;
    }
    if (diffusion)
      part.diffusion.push_back(r);
    else
      part.jumps.push_back(r);
  }
  return part;
}

std::vector<ValidityRow> diffusion_validity(const ReactionNetwork& net,
                                            const Partition& partition,
                                            const State& s, double h_min) {
  std::vector<ValidityRow> rows;
  rows.reserve(partition.diffusion.size());
  for (std::size_t r : partition.diffusion) {
    const double h = net.combinatorial_weight(r, s);
    rows.push_back({r, h, h >= h_min});
  }
  return rows;
}

}  // namespace hsim
