#include "kbq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "kbq/errors.hpp"
#include "kbq/reward.hpp"
#include "kbq/rng.hpp"

namespace kbq {

namespace {

const std::vector<std::string> kCuisines = {"chinese", "italian", "indian",  "british",    "french",
                                            "thai",    "japanese", "spanish", "turkish",   "korean",
                                            "mexican", "vietnamese", "greek", "lebanese", "portuguese",
                                            "european", "seafood"};
const std::vector<std::string> kPrices = {"cheap", "moderate", "expensive", "luxury"};
const std::vector<std::string> kAreas = {"north", "south", "east", "west", "centre", "riverside", "harbour"};
const std::vector<std::string> kRatings = {"one_star", "two_star", "three_star", "four_star", "five_star",
                                           "six_star"};
const std::vector<std::string> kNameHeads = {"golden", "royal",  "little", "red",    "blue",   "green",
                                             "happy",  "old",    "grand",  "lucky",  "silver", "jade",
                                             "lotus",  "copper", "velvet", "rustic", "sunny",  "hidden"};
const std::vector<std::string> kNameTails = {"dragon", "garden",  "house",  "kitchen", "palace", "table",
                                             "spoon",  "lantern", "bistro", "grill",   "oven",   "corner",
                                             "tavern", "plate",   "fork",   "pot"};
const std::vector<std::string> kStreets = {"mill_road", "regent_street", "hills_road", "bridge_street",
                                           "king_street", "market_square", "station_road", "castle_hill"};

const std::vector<std::string> kFields = {"name",    "cuisine", "pricerange", "area",
                                          "phone",   "address", "postcode",   "rating"};
const std::vector<std::string> kInformable = {"cuisine", "pricerange", "area"};
const std::vector<std::string> kRequestable = {"phone", "address", "postcode"};

using Words = std::vector<std::string>;

Words words(std::string_view text) { return tokenize(text); }

void append(Words& out, const Words& more) { out.insert(out.end(), more.begin(), more.end()); }

template <class T>
const T& pick(const std::vector<T>& xs, Rng& rng) {
  return xs[static_cast<std::size_t>(rng.below(xs.size()))];
}

template <class T>
void shuffle(std::vector<T>& xs, Rng& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[static_cast<std::size_t>(rng.below(i))]);
}

Words state_slot(const std::string& slot, const std::string& value, Rng& rng) {
  if (slot == "cuisine") {
    static const std::vector<std::string> t = {"i want {} food", "{} food please", "serving {} food",
                                               "i would like {} food"};
    auto s = pick(t, rng);
    return words(s.replace(s.find("{}"), 2, value));
  }
  if (slot == "pricerange") {
    static const std::vector<std::string> t = {"something in the {} price range", "a {} restaurant",
                                               "it should be {}"};
    auto s = pick(t, rng);
    return words(s.replace(s.find("{}"), 2, value));
  }
  static const std::vector<std::string> t = {"in the {} of town", "in the {} part of town", "the {} please"};
  auto s = pick(t, rng);
  return words(s.replace(s.find("{}"), 2, value));
}

Words dontcare_slot(const std::string& slot, Rng& rng) {
  if (slot == "cuisine") return words(pick(std::vector<std::string>{"i do not care about the food", "any food is fine",
                                                                    "any kind of food"}, rng));
  if (slot == "pricerange") return words(pick(std::vector<std::string>{"i do not care about the price",
                                                                       "price does not matter", "any price range"}, rng));
  return words(pick(std::vector<std::string>{"i do not care about the area", "any part of town",
                                             "the area does not matter"}, rng));
}

Words ask_slot(const std::string& slot, Rng& rng) {
  if (slot == "cuisine") return words(pick(std::vector<std::string>{"what type of food would you like ?",
                                                                    "what kind of food do you want ?"}, rng));
  if (slot == "pricerange") return words(pick(std::vector<std::string>{"what price range do you prefer ?",
                                                                       "how much would you like to spend ?"}, rng));
  return words(pick(std::vector<std::string>{"which part of town ?", "what area are you looking at ?"}, rng));
}

std::string request_phrase(const std::string& field) {
  if (field == "phone") return "phone number";
  if (field == "address") return "address";
  return "post code";
}

struct Row {
  std::vector<std::string> cells;
};

struct KbBuild {
  std::vector<Row> rows;
  std::map<std::string, std::string> partner;
};

KbBuild build_kb(const BenchConfig& c, Rng& rng) {
  const int n = c.n_rows;
  const int n_cuisine = std::min(c.cuisine_cardinality, std::max(2, n / 8));
  std::vector<std::string> cuisines(kCuisines.begin(), kCuisines.begin() + n_cuisine);
  std::vector<std::string> prices(kPrices.begin(), kPrices.begin() + c.price_cardinality);
  std::vector<std::string> areas(kAreas.begin(), kAreas.begin() + c.area_cardinality);
  std::vector<std::string> ratings(kRatings.begin(), kRatings.begin() + c.rating_cardinality);

  // Balanced cuisine assignment, then a random row order.
  std::vector<std::string> cuisine_of(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) cuisine_of[static_cast<std::size_t>(r)] = cuisines[static_cast<std::size_t>(r % n_cuisine)];
  shuffle(cuisine_of, rng);

  KbBuild out;
  std::map<std::string, std::vector<std::size_t>> rows_of;
  for (std::size_t r = 0; r < cuisine_of.size(); ++r) rows_of[cuisine_of[r]].push_back(r);

  std::vector<std::string> price_of(static_cast<std::size_t>(n));
  for (const auto& cu : cuisines) {
    auto& rs = rows_of[cu];
    const std::string partner = pick(prices, rng);
    out.partner[cu] = partner;
    if (c.rho <= 0.0) {
      for (auto r : rs) price_of[r] = pick(prices, rng);
      continue;
    }
    std::vector<std::string> others;
    for (const auto& p : prices) {
      if (p != partner) others.push_back(p);
    }
    const auto k = static_cast<std::size_t>(std::lround(c.rho * static_cast<double>(rs.size())));
    std::vector<std::size_t> order = rs;
    shuffle(order, rng);
    for (std::size_t i = 0; i < order.size(); ++i) price_of[order[i]] = i < k ? partner : pick(others, rng);
  }

  const std::size_t heads = kNameHeads.size();
  std::vector<std::size_t> name_ids(heads * kNameTails.size());
  std::iota(name_ids.begin(), name_ids.end(), 0);
  shuffle(name_ids, rng);
  for (int r = 0; r < n; ++r) {
    const auto ur = static_cast<std::size_t>(r);
    const std::size_t id = name_ids[ur];
    Row row;
    row.cells = {kNameHeads[id % heads] + "_" + kNameTails[id / heads],
                 cuisine_of[ur],
                 price_of[ur],
                 pick(areas, rng),
                 "01223-" + std::to_string(300000 + (r * 7919) % 700000),
                 std::to_string(r + 1) + "_" + kStreets[ur % kStreets.size()],
                 "cb" + std::to_string(1 + r % 9) + "_" + std::to_string(100 + r),
                 pick(ratings, rng)};
    out.rows.push_back(std::move(row));
  }
  return out;
}

Dialog script_dialog(const BenchConfig& c, const std::vector<Row>& rows, bool late, Rng& rng) {
  // Intent shape and target row.
  double total = 0.0;
  for (const auto& s : c.intents) total += s.weight;
  double u = rng.uniform() * total;
  const IntentShape* shape = &c.intents.back();
  for (const auto& s : c.intents) {
    if (u < s.weight) {
      shape = &s;
      break;
    }
    u -= s.weight;
  }
  const Row& target = rows[static_cast<std::size_t>(rng.below(rows.size()))];
  auto value_of = [&](const std::string& field) {
    const auto f = static_cast<std::size_t>(std::find(kFields.begin(), kFields.end(), field) - kFields.begin());
    return target.cells[f];
  };

  Dialog d;
  Query gold;
  for (const auto& f : shape->fields) gold.clauses.push_back({f, value_of(f)});
  d.gold_query = canonicalize(gold);
  auto in_intent = [&](const std::string& slot) {
    return std::find(shape->fields.begin(), shape->fields.end(), slot) != shape->fields.end();
  };
  auto address = [&](const std::string& slot) {
    return in_intent(slot) ? state_slot(slot, value_of(slot), rng) : dontcare_slot(slot, rng);
  };

  std::vector<std::string> slots = kInformable;
  shuffle(slots, rng);

  const int small_talk = static_cast<int>(rng.below(static_cast<std::uint64_t>(c.max_small_talk) + 1));
  for (int i = 0; i < small_talk; ++i) {
    d.turns.push_back({words(pick(std::vector<std::string>{"hello", "hi there", "good evening"}, rng)),
                       words("hello , welcome to the restaurant system . how may i help you ?")});
  }

  // Opening request with zero to two slots stated up front.
  const double b = rng.uniform();
  std::size_t next = b < 0.4 ? 0 : (b < 0.8 ? 1 : 2);
  Turn opening{words("i am looking for a restaurant"), {}};
  for (std::size_t i = 0; i < next; ++i) {
    opening.user.push_back(i == 0 ? "," : "and");
    append(opening.user, address(slots[i]));
  }

  // Optional volunteered value of a non-intent field, which an over-constrained
  // query can exploit.
  std::vector<std::string> free_slots;
  for (const auto& s : kInformable) {
    if (!in_intent(s)) free_slots.push_back(s);
  }
  const bool volunteer = !free_slots.empty() && rng.bernoulli(c.overconstrain);
  const std::string volunteer_slot = volunteer ? pick(free_slots, rng) : "";

  d.turns.push_back(std::move(opening));
  while (next < slots.size()) {
    d.turns.back().system = ask_slot(slots[next], rng);
    Turn t;
    append(t.user, address(slots[next]));
    ++next;
    if (next < slots.size() && rng.bernoulli(0.2)) {
      t.user.push_back("and");
      append(t.user, address(slots[next]));
      ++next;
    }
    d.turns.push_back(std::move(t));
  }
  if (volunteer) {
    // The user mentions the target's value but waives the constraint.
    auto& user = d.turns.back().user;
    append(user, words("my friend liked a place with " + value_of(volunteer_slot) + " but anything is fine"));
  }
  d.gold_position = d.num_turns();

  const std::string name = value_of("name");
  const Words reveal = pick(std::vector<Words>{words(name + " is a nice restaurant that matches your request ."),
                                               words("i found " + name + " for you .")},
                            rng);
  if (late) {
    d.turns.back().system = words("let me check that for you .");
    d.turns.push_back({words(pick(std::vector<std::string>{"okay", "sure thanks", "okay thank you"}, rng)), reveal});
  } else {
    d.turns.back().system = reveal;
  }

  std::vector<std::string> requests = kRequestable;
  shuffle(requests, rng);
  const std::size_t n_req = rng.bernoulli(c.second_request) ? 2 : 1;
  Turn req;
  req.user = words("what is the " + request_phrase(requests[0]) +
                   (n_req == 2 ? " and the " + request_phrase(requests[1]) : std::string()) + " ?");
  req.system = words("the " + request_phrase(requests[0]) + " is " + value_of(requests[0]) +
                     (n_req == 2 ? " and the " + request_phrase(requests[1]) + " is " + value_of(requests[1])
                                 : std::string()) +
                     " .");
  d.turns.push_back(std::move(req));
  d.turns.push_back({words("thank you goodbye"), words("you are welcome . goodbye .")});
  return d;
}

std::vector<Dialog> script_split(const BenchConfig& c, const std::vector<Row>& rows, int n, std::uint64_t split) {
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng plan = Rng::substream(c.seed, {split, 0});
  shuffle(order, plan);
  const auto matched = static_cast<std::size_t>(std::lround(c.heuristic_match * n));
  std::vector<bool> late(static_cast<std::size_t>(n), false);
  for (std::size_t i = matched; i < order.size(); ++i) late[order[i]] = true;

  std::vector<Dialog> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::substream(c.seed, {split, 1, static_cast<std::uint64_t>(i)});
    out.push_back(script_dialog(c, rows, late[static_cast<std::size_t>(i)], rng));
  }
  return out;
}

double heuristic_match_rate(const std::vector<Dialog>& corpus, const KnowledgeBase& kb) {
  if (corpus.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& d : corpus) hit += heuristic_position(d, kb) == d.gold_position;
  return static_cast<double>(hit) / static_cast<double>(corpus.size());
}

}  // namespace

void BenchConfig::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ArgumentError("rho must lie in [0, 1]");
  if (n_rows < 4) throw ArgumentError("n_rows must be at least 4");
  if (n_rows > static_cast<int>(kNameHeads.size() * kNameTails.size())) {
    throw ArgumentError("n_rows exceeds the " + std::to_string(kNameHeads.size() * kNameTails.size()) +
                        " distinct restaurant names");
  }
  if (n_train < 1 || n_val < 0 || n_test < 0) throw ArgumentError("split sizes must be non-negative, train positive");
  auto card = [](int v, std::size_t max, const char* what) {
    if (v < 2 || static_cast<std::size_t>(v) > max) {
      throw ArgumentError(std::string(what) + " cardinality must lie in [2, " + std::to_string(max) + "]");
    }
  };
  card(cuisine_cardinality, kCuisines.size(), "cuisine");
  card(price_cardinality, kPrices.size(), "price");
  card(area_cardinality, kAreas.size(), "area");
  card(rating_cardinality, kRatings.size(), "rating");
  if (intents.empty()) throw ArgumentError("at least one intent shape is required");
  for (const auto& s : intents) {
    if (s.fields.empty() || !(s.weight > 0.0)) throw ArgumentError("intent shapes need fields and a positive weight");
    for (const auto& f : s.fields) {
      if (std::find(kInformable.begin(), kInformable.end(), f) == kInformable.end()) {
        throw ArgumentError("intent field '" + f + "' is not one of cuisine, pricerange, area");
      }
      if (std::count(s.fields.begin(), s.fields.end(), f) > 1) throw ArgumentError("intent repeats field " + f);
    }
  }
  auto unit = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError(std::string(what) + " must lie in [0, 1]");
  };
  unit(heuristic_match, "heuristic_match");
  unit(second_request, "second_request");
  unit(overconstrain, "overconstrain");
  if (max_small_talk < 0) throw ArgumentError("max_small_talk must be non-negative");
}

nlohmann::json BenchConfig::to_json() const {
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& s : intents) shapes.push_back({{"fields", s.fields}, {"weight", s.weight}});
  return {{"n_rows", n_rows},
          {"n_train", n_train},
          {"n_val", n_val},
          {"n_test", n_test},
          {"rho", rho},
          {"cuisine_cardinality", cuisine_cardinality},
          {"price_cardinality", price_cardinality},
          {"area_cardinality", area_cardinality},
          {"rating_cardinality", rating_cardinality},
          {"intents", shapes},
          {"heuristic_match", heuristic_match},
          {"second_request", second_request},
          {"max_small_talk", max_small_talk},
          {"overconstrain", overconstrain},
          {"seed", seed}};
}

BenchConfig BenchConfig::from_json(const nlohmann::json& j) {
  BenchConfig c;
  try {
    c.n_rows = j.value("n_rows", c.n_rows);
    c.n_train = j.value("n_train", c.n_train);
    c.n_val = j.value("n_val", c.n_val);
    c.n_test = j.value("n_test", c.n_test);
    c.rho = j.value("rho", c.rho);
    c.cuisine_cardinality = j.value("cuisine_cardinality", c.cuisine_cardinality);
    c.price_cardinality = j.value("price_cardinality", c.price_cardinality);
    c.area_cardinality = j.value("area_cardinality", c.area_cardinality);
    c.rating_cardinality = j.value("rating_cardinality", c.rating_cardinality);
    c.heuristic_match = j.value("heuristic_match", c.heuristic_match);
    c.second_request = j.value("second_request", c.second_request);
    c.max_small_talk = j.value("max_small_talk", c.max_small_talk);
    c.overconstrain = j.value("overconstrain", c.overconstrain);
    c.seed = j.value("seed", c.seed);
    if (auto it = j.find("intents"); it != j.end()) {
      c.intents.clear();
      for (const auto& s : *it) c.intents.push_back({s.at("fields").get<std::vector<std::string>>(), s.value("weight", 1.0)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("bad benchmark config: ") + e.what());
  }
  return c;
}

double achieved_correlation(const KnowledgeBase& kb, const std::map<std::string, std::string>& partner_price) {
  const std::size_t fc = kb.require_field("cuisine");
  const std::size_t fp = kb.require_field("pricerange");
  std::size_t hit = 0;
  for (std::size_t r = 0; r < kb.num_rows(); ++r) {
    auto it = partner_price.find(kb.cell(r, fc));
    hit += it != partner_price.end() && it->second == kb.cell(r, fp);
  }
  return static_cast<double>(hit) / static_cast<double>(kb.num_rows());
}

Benchmark generate(const BenchConfig& config) {
  config.validate();
  Rng kb_rng = Rng::substream(config.seed, {0});
  KbBuild built = build_kb(config, kb_rng);
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : built.rows) cells.push_back(r.cells);
  Benchmark b{KnowledgeBase(kFields, cells), {}, {}, {}, built.partner, {}};
  b.train = script_split(config, built.rows, config.n_train, 1);
  b.val = script_split(config, built.rows, config.n_val, 2);
  b.test = script_split(config, built.rows, config.n_test, 3);

  nlohmann::json rates = nlohmann::json::object();
  rates["train"] = heuristic_match_rate(b.train, b.kb);
  rates["val"] = heuristic_match_rate(b.val, b.kb);
  rates["test"] = heuristic_match_rate(b.test, b.kb);
  b.manifest = {{"config", config.to_json()},
                {"achieved_rho", achieved_correlation(b.kb, b.partner_price)},
                {"partner_price", b.partner_price},
                {"heuristic_match_rate", rates},
                {"gold", to_json(verify_gold(b.train, b.kb))}};
  return b;
}

void save_benchmark(const Benchmark& bench, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const auto& doc) {
    std::ofstream out(dir / name);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << doc.dump(1) << '\n';
  };
  write("kb.json", bench.kb.to_json());
  save_corpus(bench.train, dir / "train.json");
  save_corpus(bench.val, dir / "val.json");
  save_corpus(bench.test, dir / "test.json");
  write("manifest.json", bench.manifest);
}

GoldReport verify_gold(const std::vector<Dialog>& corpus, const KnowledgeBase& kb) {
  GoldReport rep;
  rep.dialogs = corpus.size();
  rep.min_gold_reward = corpus.empty() ? 0.0 : 1.0;
  rep.min_partial_gap = 1.0;
  double gap_sum = 0.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Dialog& d = corpus[i];
    const std::string where = "dialog " + std::to_string(i) + ": ";
    if (!d.gold_query || !d.gold_position) throw ValidationError(where + "missing gold query or position");
    const EntitySet es = subsequent_entities(d, *d.gold_position, kb);
    if (es.empty()) throw ValidationError(where + "no entities after the query turn");
    const RewardFunction rf(kb, es);
    const double r = rf(*d.gold_query);
    if (!(r > 0.0)) throw ValidationError(where + "gold query earns no reward");
    if (r > 1.0) throw ValidationError(where + "gold reward exceeds 1");
    rep.min_gold_reward = std::min(rep.min_gold_reward, r);
    rep.max_gold_reward = std::max(rep.max_gold_reward, r);
    const auto& cl = d.gold_query->clauses;
    if (cl.size() < 2) continue;
    ++rep.multi_clause;
    double best = 0.0;
    const std::uint32_t full = (1u << cl.size()) - 1;
    for (std::uint32_t m = 1; m < full; ++m) {
      Query part;
      for (std::size_t k = 0; k < cl.size(); ++k) {
        if (m & (1u << k)) part.clauses.push_back(cl[k]);
      }
      best = std::max(best, rf(part));
    }
    const double gap = r - best;
    rep.min_partial_gap = std::min(rep.min_partial_gap, gap);
    gap_sum += gap;
    rep.confusable += best >= 0.8 * r;
  }
  if (rep.multi_clause == 0) rep.min_partial_gap = 0.0;
  rep.mean_partial_gap = rep.multi_clause ? gap_sum / static_cast<double>(rep.multi_clause) : 0.0;
  return rep;
}

nlohmann::json to_json(const GoldReport& r) {
  return {{"dialogs", r.dialogs},
          {"min_gold_reward", r.min_gold_reward},
          {"max_gold_reward", r.max_gold_reward},
          {"multi_clause", r.multi_clause},
          {"min_partial_gap", r.min_partial_gap},
          {"mean_partial_gap", r.mean_partial_gap},
          {"confusable", r.confusable}};
}

}  // namespace kbq
