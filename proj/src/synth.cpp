#include "memrag/synth.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "memrag/taxonomy.hpp"
#include "memrag/util.hpp"

namespace memrag {

namespace {

const std::vector<std::string> kPersons = {
    "Boss", "Mom", "Dad", "Uncle Li", "Aunt May", "Sister", "Brother",
    "Cousin Ana", "Grandpa", "Mentor", "Neighbor Tom", "Coach"};
const std::vector<std::string> kCities = {
    "Amsterdam", "Singapore", "Tokyo", "Paris", "Berlin", "Sydney", "Oslo",
    "Madrid", "Vienna", "Dublin", "Prague", "Lisbon", "Zurich", "Helsinki",
    "Athens", "Seoul"};
const std::vector<std::string> kFlights = {
    "EK349", "MU5100", "SQ318", "LH772", "AF1680", "BA212", "QF409", "UA837",
    "DL118", "CX255", "KL861", "NH106", "TK1984", "EY404", "JL516", "AY99"};
const std::vector<std::string> kHotels = {
    "Crowne Plaza", "Hilton Garden", "Marriott Riverside", "Hyatt Central",
    "Shangri-La", "Park Royal", "Holiday Inn", "Four Seasons", "Ritz Plaza",
    "Mandarin Oriental", "Ibis Styles", "Pan Pacific"};
const std::vector<std::string> kVenues = {
    "City Museum", "Grand Theatre", "Science Centre", "Opera House",
    "Convention Hall", "Art Gallery", "Botanic Gardens", "Stadium Arena"};
const std::vector<std::string> kAddresses = {
    "12 Baker Street", "88 Orchard Road", "5 Riverside Avenue", "221 Elm Drive",
    "9 Harbor Lane", "47 Maple Court", "3 Station Square", "66 Garden Boulevard",
    "14 Willow Walk", "70 Castle Row"};
const std::vector<std::string> kEvents = {
    "oral defense", "client visit", "team offsite", "dentist appointment",
    "piano recital", "marathon", "conference talk", "school reunion",
    "housewarming party", "product launch", "chess tournament", "charity run"};
const std::vector<std::string> kGifts = {
    "a silk scarf", "a fountain pen", "a photo album", "a tea set",
    "a board game", "a wool sweater", "a travel mug", "a puzzle box"};
const std::vector<std::string> kFoods = {
    "spicy food", "sushi", "pasta", "dumplings", "tacos", "ramen", "curry",
    "pizza", "hotpot", "paella"};
const std::vector<std::string> kSports = {
    "table tennis", "basketball", "tennis", "swimming", "badminton", "cycling",
    "rock climbing", "fencing"};
const std::vector<std::string> kGames = {
    "League of Legends", "Genshin Impact", "Minecraft", "Starcraft",
    "Civilization", "Stardew Valley"};
const std::vector<std::string> kShows = {
    "science fiction movies", "jazz concerts", "documentaries", "opera",
    "stand-up comedy", "ballet"};
const std::vector<std::string> kCars = {"BMWs", "Teslas", "Toyotas", "Audis",
                                        "Volvos", "Hondas"};
const std::vector<std::string> kPets = {"a golden retriever", "a tabby cat",
                                        "a parrot", "a hamster", "a turtle"};
const std::vector<std::string> kOccupations = {
    "research scientist", "teacher", "software engineer", "nurse", "architect",
    "accountant", "designer", "pharmacist"};
const std::vector<std::string> kNames = {
    "Wang Xiaoming", "Alice Chen", "Rahul Mehta", "Sofia Park", "Leo Tanaka",
    "Mia Novak", "Omar Haddad", "Elena Petrova"};
const std::vector<std::string> kItems = {
    "a standing desk", "a rice cooker", "noise-cancelling headphones",
    "a mechanical keyboard", "a yoga mat", "a coffee grinder",
    "an electric kettle", "a reading lamp", "a camping tent", "a drone"};
const std::vector<std::string> kVouchers = {
    "hotel voucher", "meal coupon", "gym pass", "cinema voucher",
    "spa voucher", "bookstore coupon"};
const std::vector<std::string> kTickets = {
    "the spring gala", "the tech expo", "the film festival", "the food fair",
    "the jazz night", "the car show", "the book launch", "the boat race"};

constexpr const char* kBaseTime = "2024-03-01T08:00:00Z";
constexpr const char* kReferenceNow = "2024-07-01T00:00:00Z";

// Pool that hands out each value once, then numbered variants.
class Pool {
 public:
  Pool(const std::vector<std::string>& values, Rng& rng) : values_(values) {
    rng.shuffle(values_);
  }
  std::string draw() {
    if (next_ < values_.size()) return values_[next_++];
    const std::size_t round = next_ / values_.size() + 1;
    const std::string base = values_[next_ % values_.size()];
    ++next_;
    return base + " " + std::to_string(round);
  }

 private:
  std::vector<std::string> values_;
  std::size_t next_ = 0;
};

struct UserGen {
  std::string user_id;
  Rng rng;
  Session session;
  std::set<std::string> used_texts;
  int mem_counter = 0;
  std::int64_t clock;
  std::int64_t future_cursor;  // event dates after the reference now

  Pool persons, cities, flights, hotels, venues, addresses, events, gifts,
      foods, sports, games, shows, cars, pets, occupations, names, items;

  UserGen(std::string id, std::uint64_t seed)
      : user_id(std::move(id)),
        rng(seed),
        clock(parse_iso8601_utc(kBaseTime)),
        future_cursor(parse_iso8601_utc(kReferenceNow) + 4 * 86400),
        persons(kPersons, rng),
        cities(kCities, rng),
        flights(kFlights, rng),
        hotels(kHotels, rng),
        venues(kVenues, rng),
        addresses(kAddresses, rng),
        events(kEvents, rng),
        gifts(kGifts, rng),
        foods(kFoods, rng),
        sports(kSports, rng),
        games(kGames, rng),
        shows(kShows, rng),
        cars(kCars, rng),
        pets(kPets, rng),
        occupations(kOccupations, rng),
        names(kNames, rng),
        items(kItems, rng) {
    session.user_id = user_id;
  }

  std::string next_id() { return user_id + "_m" + std::to_string(++mem_counter); }

  std::int64_t next_timestamp() {
    clock += 3600 * (1 + static_cast<std::int64_t>(rng.below(6)));
    return clock;
  }

  // "HH:MM on YYYY-MM-DD" strictly after the reference now, advancing.
  std::string next_time_value() {
    future_cursor += 86400 * (1 + static_cast<std::int64_t>(rng.below(5)));
    const std::string day = format_iso8601_utc(future_cursor).substr(0, 10);
    char hm[6];
    std::snprintf(hm, sizeof(hm), "%02d:%02d", static_cast<int>(rng.below(24)),
                  static_cast<int>(rng.below(4)) * 15);
    return std::string(hm) + " on " + day;
  }

  std::string next_date_range() {
    future_cursor += 86400 * (1 + static_cast<std::int64_t>(rng.below(5)));
    const std::string start = format_iso8601_utc(future_cursor).substr(0, 10);
    const std::int64_t end_at =
        future_cursor + 86400 * (2 + static_cast<std::int64_t>(rng.below(6)));
    return start + " to " + format_iso8601_utc(end_at).substr(0, 10);
  }

  std::string next_date_value() {
    future_cursor += 86400 * (1 + static_cast<std::int64_t>(rng.below(5)));
    return format_iso8601_utc(future_cursor).substr(0, 10);
  }

  MemoryRecord make_memory(const std::string& text, Triple triple,
                           const std::string& subclass) {
    MemoryRecord m;
    m.id = next_id();
    m.text = text;
    m.triple = std::move(triple);
    m.created_at = next_timestamp();
    m.subclass_hint = subclass;
    if (!used_texts.insert(text).second) {
      throw std::logic_error("duplicate memory text generated: " + text);
    }
    session.memories.push_back(m);
    return m;
  }
};

// Chain builders return the number of memories they appended.

int chain_flight(UserGen& u) {
  const std::string person = u.persons.draw();
  const std::string city = u.cities.draw();
  const std::string flight = u.flights.draw();
  const std::string time = u.next_time_value();
  const auto m1 = u.make_memory("My " + person + " is traveling to " + city + " next month.",
                                {person, "traveling to", city}, "Arrangement");
  const auto m2 = u.make_memory("The trip to " + city + " is on the " + flight + " flight.",
                                {city, "via flight", flight}, "Arrangement");
  const auto m3 = u.make_memory(flight + " takes off at " + time + ".",
                                {flight, "takes off at", time}, "Arrangement");
  QAPair qa;
  qa.question = "What time is my " + person + "'s flight to " + city + "?";
  qa.answer = "Your " + person + "'s trip to " + city + " uses " + flight +
              " taking off at " + time + ".";
  qa.required_memory_ids = {m1.id, m2.id, m3.id};
  qa.q_entity = city;
  qa.q_relation = "takes off at";
  u.session.qa_pairs.push_back(qa);
  return 3;
}

int chain_hotel(UserGen& u) {
  const std::string city = u.cities.draw();
  const std::string hotel = u.hotels.draw();
  const std::string range = u.next_date_range();
  const auto m1 = u.make_memory("I am planning a trip to " + city + ".",
                                {"I", "planning trip to", city}, "Arrangement");
  const auto m2 = u.make_memory("For " + city + " I reserved the " + hotel + ".",
                                {city, "stay at", hotel}, "Arrangement");
  const auto m3 = u.make_memory("The " + hotel + " booking covers " + range + ".",
                                {hotel, "reserved for", range}, "Arrangement");
  QAPair qa;
  qa.question = "When does my hotel stay in " + city + " start and end?";
  qa.answer = "In " + city + " the " + hotel + " stay runs " + range + ".";
  qa.required_memory_ids = {m1.id, m2.id, m3.id};
  qa.q_entity = city;
  qa.q_relation = "reserved for";
  u.session.qa_pairs.push_back(qa);
  return 3;
}

int chain_event(UserGen& u) {
  const std::string event = u.events.draw();
  const std::string time = u.next_time_value();
  const auto m1 = u.make_memory("I will attend the " + event + ".",
                                {"I", "attending", event}, "Arrangement");
  const auto m2 = u.make_memory("The " + event + " is scheduled at " + time + ".",
                                {event, "scheduled at", time}, "Arrangement");
  QAPair qa;
  qa.question = "When is the " + event + " happening?";
  qa.answer = "The " + event + " is scheduled at " + time + ".";
  qa.required_memory_ids = {m1.id, m2.id};
  qa.q_entity = event;
  qa.q_relation = "scheduled at";
  u.session.qa_pairs.push_back(qa);
  return 2;
}

int chain_gift(UserGen& u) {
  const std::string person = u.persons.draw();
  const std::string gift = u.gifts.draw();
  const std::string date = u.next_date_value();
  const auto m1 = u.make_memory("My " + person + " wants " + gift + ".",
                                {person, "wishes for", gift}, "Relatives");
  const auto m2 = u.make_memory("My " + person + "'s birthday is on " + date + ".",
                                {person, "birthday on", date}, "Relatives");
  QAPair qa;
  qa.question = "What should I get my " + person + " and by when?";
  qa.answer = "Get " + gift + " before " + date + ".";
  qa.required_memory_ids = {m1.id, m2.id};
  qa.q_entity = person;
  qa.q_relation = "birthday on";
  u.session.qa_pairs.push_back(qa);
  return 2;
}

int chain_venue(UserGen& u, bool generic_question) {
  const std::string venue = u.venues.draw();
  const std::string address = u.addresses.draw();
  const auto m1 = u.make_memory("I plan to visit the " + venue + " soon.",
                                {"I", "plans to visit", venue}, "Arrangement");
  const auto m2 = u.make_memory("The " + venue + " is located at " + address + ".",
                                {venue, "located at", address}, "Address");
  QAPair qa;
  qa.question = generic_question
                    ? "What is the address of the place I plan to visit?"
                    : "What is the address of the " + venue + "?";
  qa.answer = "The " + venue + " is at " + address + ".";
  qa.required_memory_ids = {m1.id, m2.id};
  qa.q_entity = venue;
  qa.q_relation = "located at";
  u.session.qa_pairs.push_back(qa);
  return 2;
}

struct OneHop {
  const char* family;
  const char* subclass;
};

int chain_one_hop(UserGen& u, std::set<std::string>& used_families) {
  struct Family {
    std::string name;
    std::string subclass;
  };
  static const std::vector<Family> kCapped = {
      {"diet", "Diet preference"},     {"sport", "Sports preference"},
      {"game", "Gaming preference"},   {"show", "Audio-visual entertainment preference"},
      {"car", "Car preference"},       {"name", "Name/Nickname"},
      {"address", "Address"},          {"occupation", "Occupation"},
      {"birthday", "Birthday/Age"},    {"anniversary", "Anniversary"},
  };
  std::vector<Family> open;
  for (const auto& f : kCapped) {
    if (!used_families.count(f.name)) open.push_back(f);
  }
  std::string family = "item";
  if (!open.empty()) {
    family = open[u.rng.below(open.size())].name;
    used_families.insert(family);
  }

  QAPair qa;
  if (family == "diet") {
    const std::string v = u.foods.draw();
    const auto m = u.make_memory("I like " + v + ".", {"I", "likes", v}, "Diet preference");
    qa = {"What food do I like?", "You like " + v + ".", {m.id}, v, "likes"};
  } else if (family == "sport") {
    const std::string v = u.sports.draw();
    const auto m = u.make_memory("I play " + v + " on weekends.", {"I", "plays", v},
                                 "Sports preference");
    qa = {"What sport do I play?", "You play " + v + ".", {m.id}, v, "plays"};
  } else if (family == "game") {
    const std::string v = u.games.draw();
    const auto m = u.make_memory("I like the game " + v + ".", {"I", "plays game", v},
                                 "Gaming preference");
    qa = {"Which game do I play?", "You play " + v + ".", {m.id}, v, "plays game"};
  } else if (family == "show") {
    const std::string v = u.shows.draw();
    const auto m = u.make_memory("I enjoy " + v + ".", {"I", "enjoys", v},
                                 "Audio-visual entertainment preference");
    qa = {"What entertainment do I enjoy?", "You enjoy " + v + ".", {m.id}, v, "enjoys"};
  } else if (family == "car") {
    const std::string v = u.cars.draw();
    const auto m = u.make_memory("I like " + v + " a lot.", {"I", "prefers", v},
                                 "Car preference");
    qa = {"Which cars do I like?", "You like " + v + ".", {m.id}, v, "prefers"};
  } else if (family == "name") {
    const std::string v = u.names.draw();
    const auto m = u.make_memory("My name is " + v + ".", {"I", "named", v},
                                 "Name/Nickname");
    qa = {"What is my name?", "Your name is " + v + ".", {m.id}, v, "named"};
  } else if (family == "address") {
    const std::string v = u.addresses.draw();
    const auto m = u.make_memory("I reside at " + v + ".", {"I", "resides at", v},
                                 "Address");
    qa = {"What is my address?", "Your address is " + v + ".", {m.id}, v, "resides at"};
  } else if (family == "occupation") {
    const std::string v = u.occupations.draw();
    const auto m = u.make_memory("I work as a " + v + ".", {"I", "works as", v},
                                 "Occupation");
    qa = {"What is my occupation?", "You work as a " + v + ".", {m.id}, v, "works as"};
  } else if (family == "birthday") {
    const std::string v = u.next_date_value();
    const auto m = u.make_memory("My birthday falls on " + v + ".",
                                 {"I", "birthday on", v}, "Birthday/Age");
    qa = {"When is my birthday?", "Your birthday is " + v + ".", {m.id}, v, "birthday on"};
  } else if (family == "anniversary") {
    const std::string v = u.next_date_value();
    const auto m = u.make_memory("Our wedding anniversary is " + v + ".",
                                 {"I", "anniversary on", v}, "Anniversary");
    qa = {"When is our wedding anniversary?", "Your anniversary is " + v + ".",
          {m.id}, v, "anniversary on"};
  } else {  // unlimited fallback: value-keyed purchases
    const std::string v = u.items.draw();
    const auto m = u.make_memory("I bought " + v + " recently.", {"I", "bought", v},
                                 "Personal belongings/Pets");
    qa = {"Did I buy " + v + "?", "Yes, you bought " + v + ".", {m.id}, v, "bought"};
  }
  u.session.qa_pairs.push_back(qa);
  return 1;
}

void add_distractor(UserGen& u, const std::map<std::string, double>& mix) {
  struct Option {
    std::string subclass;
    double weight;
  };
  static const std::vector<std::string> kSubs = {
      "Diet preference", "Sports preference", "Gaming preference",
      "Cultural preference", "Personal belongings/Pets", "Colleague/Friends",
      "Life events"};
  std::vector<Option> options;
  for (const auto& s : kSubs) {
    double w = 1.0;
    if (!mix.empty()) {
      auto it = mix.find(s);
      w = it == mix.end() ? 0.0 : it->second;
    }
    if (w > 0.0) options.push_back({s, w});
  }
  if (options.empty()) options.push_back({"Cultural preference", 1.0});
  double total = 0.0;
  for (const auto& o : options) total += o.weight;
  double draw = u.rng.uniform() * total;
  std::string subclass = options.back().subclass;
  for (const auto& o : options) {
    if (draw < o.weight) {
      subclass = o.subclass;
      break;
    }
    draw -= o.weight;
  }

  if (subclass == "Diet preference") {
    const std::string v = u.foods.draw();
    u.make_memory("Lately I crave " + v + ".", {"I", "craves", v}, subclass);
  } else if (subclass == "Sports preference") {
    const std::string v = u.sports.draw();
    u.make_memory("Watching " + v + " relaxes me.", {"I", "watches", v}, subclass);
  } else if (subclass == "Gaming preference") {
    const std::string v = u.games.draw();
    u.make_memory("I spent the evening on " + v + ".", {"I", "played", v}, subclass);
  } else if (subclass == "Cultural preference") {
    const std::string v = u.cities.draw();
    u.make_memory("Someday I dream of seeing " + v + ".", {"I", "dreams of", v},
                  subclass);
  } else if (subclass == "Personal belongings/Pets") {
    const std::string v = u.pets.draw();
    u.make_memory("I take care of " + v + ".", {"I", "cares for", v}, subclass);
  } else if (subclass == "Colleague/Friends") {
    const std::string v = u.persons.draw();
    u.make_memory("I had lunch with my " + v + " today.", {"I", "lunched with", v},
                  subclass);
  } else {
    const std::string v = u.items.draw();
    u.make_memory("I am saving up for " + v + ".", {"I", "saves for", v},
                  "Life events");
  }
}

int draw_hops(UserGen& u, const std::map<int, double>& dist, int budget) {
  double total = 0.0;
  for (const auto& [h, p] : dist) total += p;
  double draw = u.rng.uniform() * total;
  int hops = 1;
  for (const auto& [h, p] : dist) {
    if (draw < p) {
      hops = h;
      break;
    }
    draw -= p;
  }
  return std::min(hops, budget);
}

}  // namespace

std::int64_t corpus_reference_now() { return parse_iso8601_utc(kReferenceNow); }

std::vector<Session> gen_corpus(const CorpusSpec& spec) {
  if (spec.n_users < 0 || spec.memories_per_user < 0) {
    throw std::invalid_argument("gen_corpus: negative sizes");
  }
  double hop_total = 0.0;
  for (const auto& [h, p] : spec.hop_distribution) {
    if (h < 1 || h > 3) throw std::invalid_argument("gen_corpus: hops must be 1..3");
    if (p < 0.0) throw std::invalid_argument("gen_corpus: negative hop probability");
    hop_total += p;
  }
  if (std::abs(hop_total - 1.0) > 1e-9) {
    throw std::invalid_argument("gen_corpus: hop probabilities must sum to 1");
  }
  for (const auto& [s, w] : spec.subclass_mix) {
    if (w <= 0.0) throw std::invalid_argument("gen_corpus: subclass weights must be positive");
  }

  std::vector<Session> sessions;
  sessions.reserve(spec.n_users);
  for (int ui = 0; ui < spec.n_users; ++ui) {
    const std::string user_id = spec.user_prefix + std::to_string(ui);
    UserGen u(user_id, splitmix64(spec.seed ^ fnv1a64(user_id)));

    const int total = spec.memories_per_user;
    const int n_distractors = static_cast<int>(
        total * spec.distractor_ratio / (1.0 + spec.distractor_ratio) + 0.5);
    const int n_chain = total - n_distractors;

    std::set<std::string> used_one_hop;
    int budget = n_chain;
    bool generic_venue_used = false;
    while (budget > 0) {
      const int hops = draw_hops(u, spec.hop_distribution, budget);
      if (hops >= 3) {
        budget -= u.rng.bernoulli(0.5) ? chain_flight(u) : chain_hotel(u);
      } else if (hops == 2) {
        const auto pick = u.rng.below(3);
        if (pick == 0) {
          budget -= chain_event(u);
        } else if (pick == 1) {
          budget -= chain_gift(u);
        } else {
          budget -= chain_venue(u, !generic_venue_used);
          generic_venue_used = true;
        }
      } else {
        budget -= chain_one_hop(u, used_one_hop);
      }
    }
    for (int d = 0; d < n_distractors; ++d) add_distractor(u, spec.subclass_mix);

    std::sort(u.session.memories.begin(), u.session.memories.end(),
              [](const MemoryRecord& a, const MemoryRecord& b) {
                if (a.created_at != b.created_at) return a.created_at < b.created_at;
                return a.id < b.id;
              });
    sessions.push_back(std::move(u.session));
  }
  return sessions;
}

std::vector<AfUsQuery> gen_af_us_queries(const std::vector<Session>& corpus) {
  std::vector<AfUsQuery> out;
  for (const auto& session : corpus) {
    const MemoryRecord* name_mem = nullptr;
    const MemoryRecord* address_mem = nullptr;
    const MemoryRecord* occupation_mem = nullptr;
    const MemoryRecord* birthday_mem = nullptr;
    // (attending memory, scheduled-at memory) pairs keyed by event name.
    std::map<std::string, const MemoryRecord*> attending, scheduled;
    std::map<std::string, const MemoryRecord*> visiting, located;

    for (const auto& m : session.memories) {
      const std::string rel = normalize_relation(m.triple.relation);
      if (rel == "named" && !name_mem) name_mem = &m;
      if (rel == "resides at" && !address_mem) address_mem = &m;
      if (rel == "works as" && !occupation_mem) occupation_mem = &m;
      if (rel == "birthday on" && m.triple.head_entity == "I" && !birthday_mem) {
        birthday_mem = &m;
      }
      if (rel == "attending") attending[m.triple.tail_entity] = &m;
      if (rel == "scheduled at") scheduled[m.triple.head_entity] = &m;
      if (rel == "plans to visit") visiting[m.triple.tail_entity] = &m;
      if (rel == "located at") located[m.triple.head_entity] = &m;
    }

    auto add_af = [&](const MemoryRecord* m, const std::string& question,
                      const std::string& answer_prefix) {
      if (!m) return;  // user lacks this slot; the query is omitted
      AfUsQuery q;
      q.user_id = session.user_id;
      q.app = "af";
      q.qa.question = question;
      q.qa.answer = answer_prefix + m->triple.tail_entity + ".";
      q.qa.required_memory_ids = {m->id};
      q.qa.q_entity = m->triple.tail_entity;
      q.qa.q_relation = m->triple.relation;
      q.gold_entity = m->triple.tail_entity;
      q.gold_source_ids = {m->id};
      out.push_back(std::move(q));
    };
    add_af(name_mem, "What is the user's name?", "The name on file is ");
    add_af(address_mem, "What is the user's address?", "The address on file is ");
    add_af(occupation_mem, "What is the user's occupation?", "The occupation on file is ");
    add_af(birthday_mem, "What is the user's birthday?", "The birthday on file is ");

    // Reminder: the earliest upcoming scheduled event. Time values embed the
    // date as "HH:MM on YYYY-MM-DD"; comparing the date part then the clock
    // part picks the earliest.
    const MemoryRecord* best_sched = nullptr;
    const MemoryRecord* best_attend = nullptr;
    std::string best_key;
    for (const auto& [event, sched] : scheduled) {
      auto att = attending.find(event);
      if (att == attending.end()) continue;
      const std::string& time = sched->triple.tail_entity;
      const auto on = time.find(" on ");
      if (on == std::string::npos) continue;
      const std::string key = time.substr(on + 4) + " " + time.substr(0, on);
      if (!best_sched || key < best_key) {
        best_sched = sched;
        best_attend = att->second;
        best_key = key;
      }
    }
    if (best_sched) {
      AfUsQuery q;
      q.user_id = session.user_id;
      q.app = "us_reminder";
      q.qa.question = "What is my next event and when is it?";
      q.qa.answer = "Your next event is " + best_attend->triple.tail_entity +
                    " at " + best_sched->triple.tail_entity + ".";
      q.qa.required_memory_ids = {best_attend->id, best_sched->id};
      q.qa.q_entity = best_attend->triple.tail_entity;
      q.qa.q_relation = "scheduled at";
      q.gold_entity = best_attend->triple.tail_entity + " " + best_sched->triple.tail_entity;
      q.gold_source_ids = {best_attend->id, best_sched->id};
      out.push_back(std::move(q));
    }

    // Travel: address of the first planned visit (by memory id) that has one.
    const MemoryRecord* travel_visit = nullptr;
    const MemoryRecord* travel_addr = nullptr;
    for (const auto& [venue, visit] : visiting) {
      auto addr = located.find(venue);
      if (addr == located.end()) continue;
      if (!travel_visit || visit->id < travel_visit->id) {
        travel_visit = visit;
        travel_addr = addr->second;
      }
    }
    if (travel_visit) {
      AfUsQuery q;
      q.user_id = session.user_id;
      q.app = "us_travel";
      q.qa.question = "Which address should I navigate to for my planned visit?";
      q.qa.answer = "Navigate to " + travel_visit->triple.tail_entity + " at " +
                    travel_addr->triple.tail_entity + ".";
      q.qa.required_memory_ids = {travel_visit->id, travel_addr->id};
      q.qa.q_entity = travel_visit->triple.tail_entity;
      q.qa.q_relation = "located at";
      q.gold_entity = travel_addr->triple.tail_entity;
      q.gold_source_ids = {travel_addr->id};
      out.push_back(std::move(q));
    }
  }
  return out;
}

namespace {

AnswerTemplate derive_template(const QAPair& qa,
                               const std::map<std::string, const MemoryRecord*>& by_id,
                               const std::vector<std::string>& gold_source_ids) {
  AnswerTemplate tmpl;
  const std::string& answer = qa.answer;
  std::size_t pos = 0;
  std::map<std::string, int> slot_of_id;
  for (const auto& rid : qa.required_memory_ids) {
    auto it = by_id.find(rid);
    if (it == by_id.end()) {
      throw std::runtime_error("oracle derivation: unknown required id '" + rid + "'");
    }
    const std::string& tail = it->second->triple.tail_entity;
    const std::size_t at = answer.find(tail, pos);
    if (at == std::string::npos) continue;  // memory contributes no slot
    if (at > pos) {
      tmpl.parts.push_back({false, answer.substr(pos, at - pos), -1});
    }
    const int slot_index = static_cast<int>(tmpl.slots.size());
    tmpl.slots.push_back({tail, it->second->text});
    tmpl.parts.push_back({true, "", slot_index});
    slot_of_id[rid] = slot_index;
    pos = at + tail.size();
  }
  if (pos < answer.size()) {
    tmpl.parts.push_back({false, answer.substr(pos), -1});
  }
  for (const auto& gid : gold_source_ids) {
    auto it = slot_of_id.find(gid);
    if (it != slot_of_id.end()) tmpl.extract_slots.push_back(it->second);
  }
  return tmpl;
}

}  // namespace

MockOracle build_mock_oracle(const std::vector<Session>& corpus,
                             const std::vector<AfUsQuery>& af_us) {
  std::map<std::string, const MemoryRecord*> by_id;
  for (const auto& s : corpus) {
    for (const auto& m : s.memories) by_id[m.id] = &m;
  }
  MockOracle oracle;
  for (const auto& s : corpus) {
    for (const auto& qa : s.qa_pairs) {
      oracle.add_entry(qa.question, derive_template(qa, by_id, {}));
    }
  }
  for (const auto& q : af_us) {
    oracle.add_entry(q.qa.question, derive_template(q.qa, by_id, q.gold_source_ids));
  }
  return oracle;
}

namespace {

struct UserState {
  Session session;                      // live memories + current QA
  std::vector<AfUsQuery> af_us;
  std::vector<std::string> superseded;  // replaced tail values
  int edit_counter = 0;
};

bool replace_in(std::string& s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  if (at == std::string::npos) return false;
  s.replace(at, from.size(), to);
  return true;
}

}  // namespace

void refresh_qa_after_replacement(std::vector<QAPair>& qa_pairs,
                                  const MemoryRecord& old_mem,
                                  const MemoryRecord& payload) {
  for (auto& qa : qa_pairs) {
    bool requires_old = false;
    for (auto& rid : qa.required_memory_ids) {
      if (rid == old_mem.id) {
        rid = payload.id;
        requires_old = true;
      }
    }
    if (requires_old) {
      replace_in(qa.answer, old_mem.triple.tail_entity, payload.triple.tail_entity);
      if (qa.q_entity == old_mem.triple.tail_entity) {
        qa.q_entity = payload.triple.tail_entity;
      }
    }
  }
}

std::vector<WeeklySlice> gen_edit_stream(const EditStreamSpec& spec,
                                         const std::vector<Session>& corpus) {
  if (corpus.empty() && spec.weeks > 0) {
    throw std::invalid_argument("gen_edit_stream: empty corpus");
  }
  for (const auto& [kind, w] : spec.kind_mix) {
    if (w < 0.0) throw std::invalid_argument("gen_edit_stream: negative kind weight");
  }
  if (!spec.weekly_counts.empty() &&
      static_cast<int>(spec.weekly_counts.size()) != spec.weeks) {
    throw std::invalid_argument("gen_edit_stream: weekly_counts size != weeks");
  }

  Rng rng(spec.seed);
  std::map<std::string, UserState> state;
  std::vector<std::string> user_ids;
  for (const auto& s : corpus) {
    state[s.user_id].session = s;
    user_ids.push_back(s.user_id);
  }
  {
    const auto af_us = gen_af_us_queries(corpus);
    for (const auto& q : af_us) state[q.user_id].af_us.push_back(q);
  }

  Pool tickets(kTickets, rng);
  Pool vouchers(kVouchers, rng);
  Pool fresh_addresses(kAddresses, rng);

  const std::int64_t week_len = 7 * 86400;
  const std::int64_t start = corpus_reference_now() + 14 * 86400;

  // Replaceable relations and how to mint a fresh tail for them.
  const std::set<std::string> kTimeValued = {"takes off at", "scheduled at"};
  const std::set<std::string> kDateRange = {"reserved for"};
  const std::set<std::string> kAddressValued = {"located at"};

  std::int64_t future_cursor = start + static_cast<std::int64_t>(spec.weeks + 2) * week_len;
  auto fresh_time = [&] {
    future_cursor += 86400 * (1 + static_cast<std::int64_t>(rng.below(4)));
    const std::string day = format_iso8601_utc(future_cursor).substr(0, 10);
    char hm[6];
    std::snprintf(hm, sizeof(hm), "%02d:%02d", static_cast<int>(rng.below(24)),
                  static_cast<int>(rng.below(4)) * 15);
    return std::string(hm) + " on " + day;
  };
  auto fresh_range = [&] {
    future_cursor += 86400 * (1 + static_cast<std::int64_t>(rng.below(4)));
    const std::string a = format_iso8601_utc(future_cursor).substr(0, 10);
    return a + " to " +
           format_iso8601_utc(future_cursor + 86400 * (2 + static_cast<std::int64_t>(
                                                               rng.below(5))))
               .substr(0, 10);
  };

  std::vector<WeeklySlice> weeks;
  for (int w = 1; w <= spec.weeks; ++w) {
    WeeklySlice slice;
    slice.week = w;
    const std::int64_t week_start = start + static_cast<std::int64_t>(w - 1) * week_len;
    slice.eval_now = week_start + week_len;

    const int count = spec.weekly_counts.empty() ? spec.edits_per_week
                                                 : spec.weekly_counts[w - 1];
    for (int e = 0; e < count; ++e) {
      const std::string& user = user_ids[rng.below(user_ids.size())];
      UserState& us = state[user];

      double total = 0.0;
      for (const auto& [k, weight] : spec.kind_mix) total += weight;
      double draw = rng.uniform() * total;
      EditKind kind = EditKind::Insertion;
      for (const auto& [k, weight] : spec.kind_mix) {
        if (draw < weight) {
          kind = k;
          break;
        }
        draw -= weight;
      }

      const std::int64_t at = week_start + static_cast<std::int64_t>(rng.below(week_len));
      const std::string edit_id =
          user + "_w" + std::to_string(w) + "_e" + std::to_string(++us.edit_counter);

      if (kind == EditKind::Replacement) {
        std::vector<std::size_t> candidates;
        for (std::size_t i = 0; i < us.session.memories.size(); ++i) {
          const std::string rel = normalize_relation(us.session.memories[i].triple.relation);
          if (kTimeValued.count(rel) || kDateRange.count(rel) || kAddressValued.count(rel)) {
            candidates.push_back(i);
          }
        }
        if (candidates.empty()) {
          kind = EditKind::Insertion;  // nothing replaceable yet
        } else {
          const std::size_t pick = candidates[rng.below(candidates.size())];
          MemoryRecord old = us.session.memories[pick];
          const std::string rel = normalize_relation(old.triple.relation);
          std::string fresh;
          if (kTimeValued.count(rel)) fresh = fresh_time();
          else if (kDateRange.count(rel)) fresh = fresh_range();
          else fresh = fresh_addresses.draw();

          MemoryRecord payload = old;
          payload.id = edit_id;
          payload.created_at = at;
          payload.triple.tail_entity = fresh;
          payload.text = old.text;
          if (!replace_in(payload.text, old.triple.tail_entity, fresh)) {
            payload.text = old.triple.head_entity + " " + old.triple.relation + " " +
                           fresh + ".";
          }

          us.session.memories[pick] = payload;
          us.superseded.push_back(old.triple.tail_entity);
          refresh_qa_after_replacement(us.session.qa_pairs, old, payload);
          for (auto& q : us.af_us) {
            bool requires_old = false;
            for (auto& rid : q.qa.required_memory_ids) {
              if (rid == old.id) {
                rid = payload.id;
                requires_old = true;
              }
            }
            for (auto& gid : q.gold_source_ids) {
              if (gid == old.id) gid = payload.id;
            }
            if (requires_old) {
              replace_in(q.qa.answer, old.triple.tail_entity, fresh);
              replace_in(q.gold_entity, old.triple.tail_entity, fresh);
            }
          }

          EditStreamEntry entry;
          entry.user_id = user;
          entry.week = w;
          entry.cmd = {EditKind::Replacement, payload, at};
          slice.edits.push_back(std::move(entry));
          continue;
        }
      }

      if (kind == EditKind::Deletion) {
        const std::string voucher = vouchers.draw();
        MemoryRecord payload;
        payload.id = edit_id;
        payload.triple = {"I", "holds voucher", voucher};
        const std::int64_t expiry = at + 86400 * (1 + static_cast<std::int64_t>(rng.below(5)));
        payload.text = "My " + voucher + " expires on " +
                       format_iso8601_utc(expiry).substr(0, 10) + ".";
        payload.created_at = at;
        payload.valid_until = expiry;
        payload.subclass_hint = "Life events";
        us.session.memories.push_back(payload);

        EditStreamEntry entry;
        entry.user_id = user;
        entry.week = w;
        entry.cmd = {EditKind::Deletion, payload, at};
        slice.edits.push_back(std::move(entry));
        continue;
      }

      // Insertion: a fresh ticket fact plus a question that needs it.
      const std::string show = tickets.draw();
      MemoryRecord payload;
      payload.id = edit_id;
      payload.triple = {"I", "holds ticket for", show};
      payload.text = "I picked up a ticket for " + show + ".";
      payload.created_at = at;
      payload.subclass_hint = "Arrangement";
      us.session.memories.push_back(payload);
      QAPair qa;
      qa.question = "Do I have a ticket for " + show + "?";
      qa.answer = "Yes, you hold a ticket for " + show + ".";
      qa.required_memory_ids = {payload.id};
      qa.q_entity = show;
      qa.q_relation = "holds ticket for";
      us.session.qa_pairs.push_back(qa);

      EditStreamEntry entry;
      entry.user_id = user;
      entry.week = w;
      entry.cmd = {EditKind::Insertion, payload, at};
      slice.edits.push_back(std::move(entry));
    }

    for (const auto& uid : user_ids) {
      slice.sessions.push_back(state[uid].session);
      for (const auto& q : state[uid].af_us) slice.af_us.push_back(q);
      slice.superseded[uid] = state[uid].superseded;
    }
    weeks.push_back(std::move(slice));
  }
  return weeks;
}

void save_af_us(const std::vector<AfUsQuery>& queries, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write query file: " + path.string());
  for (const auto& q : queries) {
    nlohmann::json j = qa_to_json(q.qa);
    j["user_id"] = q.user_id;
    j["app"] = q.app;
    j["gold_entity"] = q.gold_entity;
    j["gold_source_ids"] = q.gold_source_ids;
    out << j.dump() << '\n';
  }
}

std::vector<AfUsQuery> load_af_us(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open query file: " + path.string());
  std::vector<AfUsQuery> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      AfUsQuery q;
      q.qa = qa_from_json(j);
      q.user_id = j.at("user_id").get<std::string>();
      q.app = j.at("app").get<std::string>();
      q.gold_entity = j.at("gold_entity").get<std::string>();
      q.gold_source_ids = j.value("gold_source_ids", std::vector<std::string>{});
      out.push_back(std::move(q));
    } catch (const std::exception& e) {
      throw std::runtime_error("query file parse error at " + path.filename().string() +
                               ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace memrag
