#include "david/synthgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "david/provider.hpp"
#include "david/text.hpp"

namespace david {

namespace {

constexpr int kCharW = 9;   // monospace-ish glyph advance in page units
constexpr int kLineH = 22;  // word box height

BBox clamp_to_page(BBox b, int pw, int ph) {
  int xmax = std::min(pw - 1, kCoordMax);
  int ymax = std::min(ph - 1, kCoordMax);
  b.x0 = std::clamp(b.x0, 0, xmax);
  b.x1 = std::clamp(b.x1, 0, xmax);
  b.y0 = std::clamp(b.y0, 0, ymax);
  b.y1 = std::clamp(b.y1, 0, ymax);
  if (b.x1 < b.x0) std::swap(b.x0, b.x1);
  if (b.y1 < b.y0) std::swap(b.y0, b.y1);
  return b;
}

std::string join_words(const std::vector<std::string>& ws) {
  std::string out;
  for (const auto& w : ws) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

// A run of words starting at one x position, all sharing a token label.
struct Chunk {
  std::vector<std::string> words;
  int x = 0;
  int label = 0;
};

// Lays the chunks on one text row and registers them as a single entity.
int add_entity_row(Document& d, const std::vector<Chunk>& chunks, int y, const std::string& cat) {
  std::vector<Token> toks;
  BBox cover;
  bool first = true;
  std::string text;
  for (const auto& c : chunks) {
    int x = c.x;
    for (const auto& w : c.words) {
      int wid = std::max<int>(2, static_cast<int>(w.size())) * kCharW;
      Token t;
      t.text = w;
      t.bbox = clamp_to_page({x, y, x + wid, y + kLineH}, d.page_width, d.page_height);
      t.gold_label = c.label;
      toks.push_back(t);
      cover = first ? t.bbox : union_box(cover, t.bbox);
      first = false;
      if (!text.empty()) text += ' ';
      text += w;
      x += wid + 6;
    }
  }
  Entity e;
  e.id = static_cast<int>(d.entities.size());
  e.text = text;
  e.bbox = clamp_to_page({cover.x0 - 6, cover.y0 - 5, cover.x1 + 6, cover.y1 + 5}, d.page_width,
                         d.page_height);
  e.category = cat;
  e.provenance = Provenance::gold;
  d.entities.push_back(e);
  for (auto& t : toks) {
    t.id = static_cast<int>(d.tokens.size());
    t.parent_entity = e.id;
    d.tokens.push_back(t);
  }
  return e.id;
}

std::string digit_run(Rng& rng, int n) {
  std::string s;
  for (int i = 0; i < n; ++i)
    s += static_cast<char>('0' + rng.uniform_int(i == 0 && n > 1 ? 1 : 0, 9));
  return s;
}

std::string cents_text(long long cents) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%02lld", cents / 100, cents % 100);
  return buf;
}

std::string make_date(Rng& rng) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", static_cast<int>(rng.uniform_int(2019, 2025)),
                static_cast<int>(rng.uniform_int(1, 12)), static_cast<int>(rng.uniform_int(1, 28)));
  return buf;
}

const std::vector<std::string>& first_names() {
  static const std::vector<std::string> v = {"Alice", "Marcus", "Priya", "Chen",  "Sofia",
                                             "David", "Ingrid", "Tom",   "Amara", "Felix"};
  return v;
}
const std::vector<std::string>& last_names() {
  static const std::vector<std::string> v = {"Nguyen", "Smith",    "Patel",  "Okafor", "Jensen",
                                             "Romero", "Kowalski", "Tanaka", "Brown",  "Silva"};
  return v;
}

std::string make_company(Rng& rng) {
  static const std::vector<std::string> a = {"Meridian", "Apex",   "Cedar",   "Northern",
                                             "Pacific",  "Summit", "Granite", "Vector"};
  static const std::vector<std::string> b = {"Capital", "Mining", "Logistics",
                                             "Energy",  "Media",  "Textiles"};
  static const std::vector<std::string> sfx = {"Pty Ltd", "Holdings", "Group", "Corp"};
  return rng.pick(a) + " " + rng.pick(b) + " " + rng.pick(sfx);
}

std::string make_company_id(Rng& rng) {
  return digit_run(rng, 3) + " " + digit_run(rng, 3) + " " + digit_run(rng, 3);
}

std::string make_person(Rng& rng) { return rng.pick(first_names()) + " " + rng.pick(last_names()); }

std::string make_holder_id(Rng& rng) { return "H-" + digit_run(rng, 5); }

std::string make_share_class(Rng& rng) {
  static const std::vector<std::string> v = {"Ordinary", "Preference", "Class A", "Class B"};
  return rng.pick(v);
}

std::string make_votes(Rng& rng) {
  std::string digits = digit_run(rng, static_cast<int>(rng.uniform_int(5, 8)));
  std::string out;
  int from_right = 0;
  for (size_t i = digits.size(); i-- > 0;) {
    if (from_right && from_right % 3 == 0) out.insert(out.begin(), ',');
    out.insert(out.begin(), digits[i]);
    ++from_right;
  }
  return out;
}

std::string make_percent(Rng& rng) {
  long long v = rng.uniform_int(100, 9999);  // 1.00% .. 99.99%
  return cents_text(v) + "%";
}

std::string make_address(Rng& rng) {
  static const std::vector<std::string> street = {"Wallaby", "Harbor",  "Station",
                                                  "Victory", "Gumtree", "Miller"};
  static const std::vector<std::string> road = {"Road", "Street", "Avenue", "Lane"};
  static const std::vector<std::string> city = {"Sydney", "Perth", "Brisbane", "Hobart", "Darwin"};
  return std::to_string(rng.uniform_int(1, 399)) + " " + rng.pick(street) + " " + rng.pick(road) +
         " " + rng.pick(city);
}

std::string make_phone(Rng& rng) {
  return "0" + digit_run(rng, 1) + " " + digit_run(rng, 4) + " " + digit_run(rng, 4);
}

struct FieldDef {
  const char* category;
  std::vector<std::string> keys;
  std::string (*make)(Rng&);
};

const std::vector<FieldDef>& form_fields() {
  static const std::vector<FieldDef> defs = {
      {"company_name", {"Company Name:", "Name of Company:"}, make_company},
      {"company_id", {"Company ID:", "ACN:"}, make_company_id},
      {"holder_name", {"Holder Name:", "Name of Holder:"}, make_person},
      {"holder_id", {"Holder ID:", "Account No:"}, make_holder_id},
      {"date_given", {"Date Given:", "Date of Notice:"}, make_date},
      {"share_class", {"Share Class:", "Class of Shares:"}, make_share_class},
      {"votes", {"Votes Held:", "Number of Votes:"}, make_votes},
      {"voting_power", {"Voting Power:", "Power Percent:"}, make_percent},
      {"address", {"Address:", "Registered Address:"}, make_address},
      {"phone", {"Phone:", "Contact No:"}, make_phone},
  };
  return defs;
}

std::string strip_trailing_colon(std::string s) {
  while (!s.empty() && s.back() == ':') s.pop_back();
  return s;
}

std::string doc_id_for(const std::string& kind, int idx) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%s-%05d", kind.c_str(), idx);
  return buf;
}

Document make_form(const CorpusSpec& spec, const LabelSpace& space, int idx) {
  Rng rng(derive_seed(spec.seed, static_cast<uint64_t>(idx)));
  Document d;
  d.id = doc_id_for("form", idx);
  d.page_width = 620;
  d.page_height = 820;

  static const std::vector<std::string> titles = {
      "Substantial Holding Notice", "Shareholder Details Form", "Company Holding Summary",
      "Notice of Interest Change"};
  add_entity_row(d, {{split_whitespace(rng.pick(titles)), 60, 0}}, 40, "header");

  const auto& defs = form_fields();
  int k = std::clamp<int>(static_cast<int>(rng.uniform_int(spec.fields_min, spec.fields_max)), 1,
                          static_cast<int>(defs.size()));
  std::vector<int> order(defs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  rng.shuffle(order);
  order.resize(k);

  int y = 120;
  for (int fi : order) {
    const FieldDef& def = defs[fi];
    const std::string& key = def.keys[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int64_t>(def.keys.size()) - 1))];
    std::string value = def.make(rng);
    int vx = 340 + 2 * static_cast<int>(rng.uniform_int(0, 20));
    add_entity_row(d, {{split_whitespace(key), 60, 0}}, y, "key");
    int veid = add_entity_row(d, {{split_whitespace(value), vx, space.index_of(def.category)}}, y,
                              "value");
    d.qa_pairs.push_back({strip_trailing_colon(key), value, veid, 1.0});
    y += 52 + static_cast<int>(rng.uniform_int(0, 9));
  }
  if (rng.bernoulli(0.5)) {
    int fy = 720 + static_cast<int>(rng.uniform_int(0, 40));
    add_entity_row(d, {{{"Signed", "on", make_date(rng)}, 60, 0}}, fy, "footer");
  }
  d.set_relations_from_parents();
  d.validate();
  return d;
}

std::string capitalized(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

Document make_receipt(const CorpusSpec& spec, const LabelSpace& space, int idx) {
  Rng rng(derive_seed(spec.seed, static_cast<uint64_t>(idx)));
  Document d;
  d.id = doc_id_for("receipt", idx);
  d.page_width = 480;
  d.page_height = 1000;

  static const std::vector<std::string> adj = {"Blue",    "Golden", "Happy",  "Corner",
                                               "Sunrise", "Urban",  "Little", "Royal"};
  static const std::vector<std::string> noun = {"Bean",   "Fork",  "Wok",   "Spoon",
                                                "Garden", "Olive", "Maple", "Harbor"};
  static const std::vector<std::string> sfx = {"Cafe", "Diner", "Kitchen", "Bistro", "Grill"};
  std::string store = rng.pick(adj) + " " + rng.pick(noun) + " " + rng.pick(sfx);
  int header_eid =
      add_entity_row(d, {{split_whitespace(store), 120, space.index_of("store_name")}}, 30,
                     "header");
  d.qa_pairs.push_back({"store name", store, header_eid, 1.0});

  static const std::vector<std::string> dish_adj = {"spicy", "grilled", "fried",   "iced",
                                                    "fresh", "double",  "classic", "house"};
  static const std::vector<std::string> dish = {"noodles",   "latte", "burger", "salad", "tea",
                                                "dumplings", "rice",  "soup",   "toast", "bagel"};
  int k = std::clamp<int>(static_cast<int>(rng.uniform_int(spec.fields_min, spec.fields_max)), 1,
                          12);
  long long subtotal = 0;
  int y = 110;
  for (int i = 0; i < k; ++i) {
    int count = 1 + static_cast<int>(rng.uniform_int(0, 3));
    std::string name = capitalized(rng.pick(dish));
    if (rng.bernoulli(0.6)) name = capitalized(rng.pick(dish_adj)) + " " + name;
    long long price = rng.uniform_int(150, 2500);
    subtotal += count * price;
    add_entity_row(d,
                   {{{std::to_string(count) + "x"}, 40, space.index_of("menu_count")},
                    {split_whitespace(name), 95, space.index_of("menu_name")},
                    {{cents_text(price)}, 360, space.index_of("menu_price")}},
                   y, "item");
    y += 40 + static_cast<int>(rng.uniform_int(0, 8));
  }
  y += 24;

  long long tax = std::llround(0.1 * static_cast<double>(subtotal));
  long long total = subtotal + tax;
  long long cash = (total + 499) / 500 * 500;
  auto summary_line = [&](const char* kw, long long cents, const char* cat) {
    int eid = add_entity_row(
        d, {{{kw}, 60, 0}, {{cents_text(cents)}, 340, space.index_of(cat)}}, y, "summary");
    d.qa_pairs.push_back({to_lower(kw), cents_text(cents), eid, 1.0});
    y += 34;
  };
  summary_line("SUBTOTAL", subtotal, "subtotal");
  summary_line("TAX", tax, "tax");
  summary_line("TOTAL", total, "total");
  if (rng.bernoulli(0.7)) {
    summary_line("CASH", cash, "cash");
    summary_line("CHANGE", cash - total, "change");
  }
  d.set_relations_from_parents();
  d.validate();
  return d;
}

// one corrupted character, OCR style
std::string ocr_mangle(std::string s, Rng& rng) {
  if (s.empty()) return s;
  size_t p = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(s.size()) - 1));
  char c = s[p];
  char lc = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  char repl;
  switch (lc) {
    case 'o': repl = '0'; break;
    case '0': repl = 'o'; break;
    case 'l': case 'i': repl = '1'; break;
    case '1': repl = 'l'; break;
    case 's': repl = '5'; break;
    case '5': repl = 's'; break;
    case 'e': repl = '3'; break;
    case '3': repl = 'e'; break;
    case 'a': repl = '4'; break;
    case '4': repl = 'a'; break;
    case 'b': repl = '8'; break;
    case '8': repl = 'b'; break;
    case 't': repl = '7'; break;
    case '7': repl = 't'; break;
    case ' ': repl = '.'; break;
    default:
      repl = std::isupper(static_cast<unsigned char>(c))
                 ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
                 : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  s[p] = repl;
  return s;
}

std::string degrade_text(const std::string& text, Rng& rng) {
  double r = rng.uniform();
  auto words = split_whitespace(text);
  if (r < 0.45 && words.size() >= 2) {
    size_t drop = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(words.size()) - 1));
    words.erase(words.begin() + static_cast<ptrdiff_t>(drop));
    return join_words(words);
  }
  if (r < 0.85) return ocr_mangle(text, rng);
  return "";
}

}  // namespace

void CorpusSpec::validate() const {
  require(n_documents >= 1, Errc::invalid_argument, "corpus needs at least one document");
  require(document_kind == "form" || document_kind == "receipt", Errc::invalid_argument,
          "document_kind must be form or receipt");
  require(fields_min >= 1 && fields_min <= fields_max && fields_max <= 12, Errc::invalid_argument,
          "fields range must satisfy 1 <= min <= max <= 12");
  if (!gold_label_space.categories.empty()) {
    gold_label_space.validate();
    for (const auto& cat : default_gold_space(document_kind).categories)
      if (cat != gold_label_space.categories[0])
        require(gold_label_space.index_of(cat) >= 1, Errc::invalid_argument,
                "gold label space lacks template category " + cat);
  }
}

void LayoutNoiseConfig::validate() const {
  require(target_mean_iou > 0.0 && target_mean_iou <= 1.0, Errc::invalid_argument,
          "target_mean_iou must be in (0,1]");
  require(text_drop_rate >= 0.0 && text_drop_rate < 1.0, Errc::invalid_argument,
          "text_drop_rate must be in [0,1)");
  require(merge_split_rate >= 0.0 && merge_split_rate < 1.0, Errc::invalid_argument,
          "merge_split_rate must be in [0,1)");
}

void LabelNoiseConfig::validate() const {
  require(lambda > 0.0, Errc::invalid_argument, "lambda must be positive");
  require(mode == "incorrect" || mode == "incomplete", Errc::invalid_argument,
          "mode must be incorrect or incomplete");
}

LabelSpace default_gold_space(const std::string& kind) {
  LabelSpace s;
  s.name = "gold";
  if (kind == "form") {
    s.categories = {"other",      "company_name", "company_id",   "holder_name",
                    "holder_id",  "date_given",   "share_class",  "votes",
                    "voting_power", "address",    "phone"};
  } else if (kind == "receipt") {
    s.categories = {"other",    "store_name", "menu_name", "menu_count", "menu_price",
                    "subtotal", "tax",        "total",     "cash",       "change"};
  } else {
    fail(Errc::invalid_argument, "unknown document kind " + kind);
  }
  return s;
}

LabelSpace default_synthetic_space() {
  LabelSpace s;
  s.name = "synthetic";
  s.categories = {"other", "header_text", "key_text", "name", "amount", "date"};
  return s;
}

std::vector<Document> generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  LabelSpace space =
      spec.gold_label_space.categories.empty() ? default_gold_space(spec.document_kind)
                                               : spec.gold_label_space;
  space.validate();
  std::vector<Document> docs;
  docs.reserve(static_cast<size_t>(spec.n_documents));
  for (int i = 0; i < spec.n_documents; ++i)
    docs.push_back(spec.document_kind == "form" ? make_form(spec, space, i)
                                                : make_receipt(spec, space, i));
  return docs;
}

Document perturb_layout_annotations(const Document& gold, const LayoutNoiseConfig& cfg) {
  cfg.validate();
  require(!gold.entities.empty(), Errc::no_entities,
          "layout perturbation needs gold entities in " + gold.id);
  Rng rng(derive_seed(cfg.seed, gold.id));

  struct Pending {
    std::string text;
    BBox box;
    std::string category;
  };
  std::vector<Pending> pend;
  const auto& src = gold.entities;
  for (size_t i = 0; i < src.size();) {
    if (i + 1 < src.size() && rng.bernoulli(cfg.merge_split_rate * 0.5)) {
      Pending p;
      p.text = src[i].text.empty() ? src[i + 1].text
                                   : (src[i + 1].text.empty() ? src[i].text
                                                              : src[i].text + " " + src[i + 1].text);
      p.box = union_box(src[i].bbox, src[i + 1].bbox);
      p.category = src[i].category;
      pend.push_back(std::move(p));
      i += 2;
      continue;
    }
    auto words = split_whitespace(src[i].text);
    if (words.size() >= 2 && src[i].bbox.width() >= 40 &&
        rng.bernoulli(cfg.merge_split_rate * 0.5)) {
      size_t half = words.size() / 2;
      int xm = src[i].bbox.x0 + static_cast<int>(src[i].bbox.width() / 2);
      Pending a{join_words({words.begin(), words.begin() + static_cast<ptrdiff_t>(half)}),
                {src[i].bbox.x0, src[i].bbox.y0, xm, src[i].bbox.y1},
                src[i].category};
      Pending b{join_words({words.begin() + static_cast<ptrdiff_t>(half), words.end()}),
                {xm, src[i].bbox.y0, src[i].bbox.x1, src[i].bbox.y1},
                src[i].category};
      pend.push_back(std::move(a));
      pend.push_back(std::move(b));
      ++i;
      continue;
    }
    pend.push_back({src[i].text, src[i].bbox, src[i].category});
    ++i;
  }

  if (cfg.target_mean_iou < 1.0) {
    for (auto& p : pend) {
      double t = std::clamp(rng.normal(cfg.target_mean_iou, 0.12), 0.02, 1.0);
      // shift both axes by the same relative amount s; IoU(shifted, original)
      // = (1-s)^2 / (2 - (1-s)^2), inverted here
      double u = 2.0 * t / (1.0 + t);
      double s = 1.0 - std::sqrt(u);
      int dx = static_cast<int>(std::lround(s * static_cast<double>(p.box.width())));
      int dy = static_cast<int>(std::lround(s * static_cast<double>(p.box.height())));
      if (rng.bernoulli(0.5)) dx = -dx;
      if (rng.bernoulli(0.5)) dy = -dy;
      BBox b{p.box.x0 + dx, p.box.y0 + dy, p.box.x1 + dx, p.box.y1 + dy};
      p.box = clamp_to_page(b, gold.page_width, gold.page_height);
    }
  }
  for (auto& p : pend)
    if (rng.bernoulli(cfg.text_drop_rate)) p.text = degrade_text(p.text, rng);

  Document out;
  out.id = gold.id;
  out.page_width = gold.page_width;
  out.page_height = gold.page_height;
  out.split = gold.split;
  out.annotation_provenance = Provenance::synthetic;
  out.entities.reserve(pend.size());
  for (size_t j = 0; j < pend.size(); ++j) {
    Entity e;
    e.id = static_cast<int>(j);
    e.text = pend[j].text;
    e.bbox = pend[j].box;
    e.category = pend[j].category;
    e.provenance = Provenance::synthetic;
    out.entities.push_back(std::move(e));
  }
  out.tokens = gold.tokens;
  for (auto& t : out.tokens) {
    t.gold_label.reset();
    t.synthetic_label.reset();
    t.parent_entity.reset();
  }
  out.relation_matrix = compute_relation_matrix(out.tokens, out.entities);
  for (size_t i = 0; i < out.tokens.size(); ++i)
    for (size_t j = 0; j < out.entities.size(); ++j)
      if (out.relation_matrix.at(static_cast<int>(i), static_cast<int>(j)))
        out.tokens[i].parent_entity = out.entities[j].id;
  out.validate();
  return out;
}

Document generate_synthetic_tags(const Document& doc, AnnotationProvider& provider,
                                 const LabelSpace& synthetic_space) {
  synthetic_space.validate();
  Document out = doc;
  if (out.tokens.empty()) return out;
  auto ids = provider.tag_tokens(out, synthetic_space);
  require(ids.size() == out.tokens.size(), Errc::provider_failure,
          provider.name() + " returned " + std::to_string(ids.size()) + " tags for " +
              std::to_string(out.tokens.size()) + " tokens in " + out.id);
  for (size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && ids[i] < static_cast<int>(synthetic_space.size()),
            Errc::provider_failure, "tag id out of range in " + out.id);
    out.tokens[i].synthetic_label = ids[i];
  }
  return out;
}

Document generate_synthetic_inquiries(const Document& doc, AnnotationProvider& provider,
                                      int max_pairs) {
  require(max_pairs >= 1, Errc::invalid_argument, "max_pairs must be at least 1");
  require(!doc.entities.empty(), Errc::no_entities,
          "inquiry generation needs entities in " + doc.id);
  Document out = doc;
  auto proposals = provider.propose_inquiries(out, max_pairs);
  out.qa_pairs.clear();
  for (const auto& pr : proposals) {
    if (static_cast<int>(out.qa_pairs.size()) >= max_pairs) break;
    if (pr.key_text.empty() || pr.answer_text.empty()) continue;
    int best = 0;
    double best_score = -1.0;
    for (size_t j = 0; j < out.entities.size(); ++j) {
      double sc = jaccard_similarity(pr.answer_text, out.entities[j].text);
      if (sc > best_score) {
        best_score = sc;
        best = static_cast<int>(j);
      }
    }
    if (best_score < 0.2) continue;
    out.qa_pairs.push_back({pr.key_text, pr.answer_text, out.entities[best].id, best_score});
  }
  return out;
}

AnnotationQualityStats measure_annotation_quality(const std::vector<Document>& synthetic,
                                                  const std::vector<Document>& gold) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : synthetic) by_id[d.id] = &d;
  AnnotationQualityStats stats;
  for (const auto& g : gold) {
    auto it = by_id.find(g.id);
    require(it != by_id.end(), Errc::id_mismatch, "no synthetic counterpart for " + g.id);
    if (g.entities.empty()) continue;
    const Document& s = *it->second;
    double iou_sum = 0.0, jac_sum = 0.0;
    for (const auto& ge : g.entities) {
      double best = 0.0;
      const Entity* match = nullptr;
      for (const auto& se : s.entities) {
        double v = iou(ge.bbox, se.bbox);
        if (match == nullptr || v > best) {
          best = v;
          match = &se;
        }
      }
      iou_sum += best;
      jac_sum += match ? jaccard_similarity(ge.text, match->text) : 0.0;
    }
    double m = static_cast<double>(g.entities.size());
    stats.per_doc_iou.push_back(iou_sum / m);
    stats.per_doc_jaccard.push_back(jac_sum / m);
  }
  for (double v : stats.per_doc_iou) stats.mean_iou += v;
  for (double v : stats.per_doc_jaccard) stats.mean_jaccard += v;
  if (!stats.per_doc_iou.empty()) {
    stats.mean_iou /= static_cast<double>(stats.per_doc_iou.size());
    stats.mean_jaccard /= static_cast<double>(stats.per_doc_jaccard.size());
  }
  return stats;
}

std::vector<Document> corrupt_guidance_labels(std::vector<Document> docs,
                                              const LabelNoiseConfig& cfg,
                                              const LabelSpace& gold_space) {
  cfg.validate();
  gold_space.validate();
  int k = static_cast<int>(gold_space.size());
  if (cfg.mode == "incorrect")
    require(k >= 3, Errc::invalid_argument,
            "incorrect mode needs at least two non-outside categories");
  for (auto& d : docs) {
    Rng rng(derive_seed(cfg.seed, d.id));
    for (auto& t : d.tokens) {
      if (!t.gold_label || *t.gold_label == 0) continue;
      require(*t.gold_label > 0 && *t.gold_label < k, Errc::missing_label,
              "gold label out of space range in " + d.id);
      if (std::fabs(rng.normal()) <= cfg.lambda) continue;
      if (cfg.mode == "incorrect") {
        int repl = 1 + static_cast<int>(rng.uniform_int(0, k - 3));
        if (repl >= *t.gold_label) ++repl;
        t.gold_label = repl;
      } else {
        t.gold_label = 0;
      }
    }
  }
  return docs;
}

double corruption_probability(double lambda) {
  require(lambda > 0.0, Errc::invalid_argument, "lambda must be positive");
  return std::erfc(lambda / std::sqrt(2.0));
}

std::vector<long long> gold_label_histogram(const std::vector<Document>& docs,
                                            const LabelSpace& gold_space) {
  gold_space.validate();
  std::vector<long long> hist(gold_space.size(), 0);
  for (const auto& d : docs)
    for (const auto& t : d.tokens)
      if (t.gold_label) {
        require(*t.gold_label >= 0 && *t.gold_label < static_cast<int>(hist.size()),
                Errc::missing_label, "gold label outside label space in " + d.id);
        ++hist[static_cast<size_t>(*t.gold_label)];
      }
  return hist;
}

}  // namespace david
