#include "kypher/corpus.hpp"

#include "kypher/error.hpp"
#include "kypher/io.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>

namespace fs = std::filesystem;

namespace kypher {

namespace {

// mt19937_64 is bit-exact everywhere; the standard distributions are not,
// so bounded draws are done by hand.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t below(std::uint64_t n) { return n ? gen_() % n : 0; }
    bool chance(double p) { return static_cast<double>(gen_() >> 11) * 0x1.0p-53 < p; }

private:
    std::mt19937_64 gen_;
};

struct FileBuilder {
    std::string path;
    EdgeWriter writer;
    std::uint64_t next_id = 1;
    bool with_id;

    FileBuilder(const fs::path& dir, const std::string& name, bool with_id_col)
        : path((dir / name).string()),
          writer(EdgeWriter::open_path(
              path, ColumnSchema::from_columns(
                        with_id_col ? std::vector<std::string>{"id", "node1", "label", "node2"}
                                    : std::vector<std::string>{"node1", "label", "node2"},
                        false))),
          with_id(with_id_col) {}

    void edge(const Value& n1, const Value& label, const Value& n2) {
        Record row;
        if (with_id) row.push_back(Value::symbol("E" + std::to_string(next_id++)));
        row.push_back(n1);
        row.push_back(label);
        row.push_back(n2);
        writer.write(row);
    }
};

Value sym(const std::string& s) { return Value::symbol(s); }
Value en(const std::string& s) { return Value::lang_string(s, "en"); }

} // namespace

std::vector<std::string> generate_corpus(const CorpusSpec& spec, const std::string& out_dir) {
    fs::create_directories(out_dir);
    fs::path dir(out_dir);
    Rng rng(spec.seed);

    FileBuilder p31(dir, "p31.tsv", true);
    FileBuilder p279(dir, "p279.tsv", false);
    FileBuilder items(dir, "items.tsv", true);
    FileBuilder labels(dir, "labels.tsv", false);
    FileBuilder external_ids(dir, "external_ids.tsv", true);
    FileBuilder infobox(dir, "infobox.tsv", true);
    FileBuilder time_file(dir, "time.tsv", true);

    // --- class hierarchy (a DAG rooted at Q35120) ---
    const std::string kRoot = "Q35120";       // entity
    const std::string kHuman = "Q5";          // human
    const std::string kPublication = "Q591041"; // scientific publication
    const std::string kCancer = "Q12078";     // cancer
    const std::string kFilm = "Q11424";       // film

    struct Family {
        std::string root;
        std::vector<std::string> members; // root last-added classes
    };
    // family 0 is miscellaneous, parented at the entity root
    std::vector<Family> families = {
        {kRoot, {}}, {kPublication, {}}, {kCancer, {}}, {kFilm, {}}};

    labels.edge(sym(kRoot), sym("label"), en("entity"));
    labels.edge(sym(kHuman), sym("label"), en("human"));
    labels.edge(sym(kPublication), sym("label"), en("scientific publication"));
    labels.edge(sym(kCancer), sym("label"), en("cancer"));
    labels.edge(sym(kFilm), sym("label"), en("film"));
    p279.edge(sym(kHuman), sym("P279"), sym(kRoot));
    p279.edge(sym(kPublication), sym("P279"), sym(kRoot));
    p279.edge(sym(kCancer), sym("P279"), sym(kRoot));
    p279.edge(sym(kFilm), sym("P279"), sym(kRoot));

    std::vector<std::string> all_classes = {kRoot, kHuman, kPublication, kCancer, kFilm};
    for (std::uint64_t i = 0; i < spec.classes; ++i) {
        std::string cls = "Q" + std::to_string(8000000 + i);
        Family& family = families[i % families.size()];
        // parent within the family keeps each themed subtree connected
        std::string parent = family.members.empty()
                                 ? family.root
                                 : family.members[rng.below(family.members.size())];
        p279.edge(sym(cls), sym("P279"), sym(parent));
        if (!family.members.empty() && rng.chance(0.25)) {
            // occasional second parent; still acyclic because parents are
            // strictly older classes
            std::string extra = family.members[rng.below(family.members.size())];
            if (extra != parent) p279.edge(sym(cls), sym("P279"), sym(extra));
        }
        labels.edge(sym(cls), sym("label"), en("class " + std::to_string(i)));
        family.members.push_back(cls);
        all_classes.push_back(cls);
    }
    const std::vector<std::string>& publication_classes = families[1].members;
    const std::vector<std::string>& cancer_classes = families[2].members;

    // --- given-name entities ---
    std::uint64_t name_count = std::max<std::uint64_t>(4, spec.persons / 25);
    std::vector<std::string> names;
    for (std::uint64_t j = 0; j < name_count; ++j) {
        std::string name = "Q" + std::to_string(5000000 + j);
        names.push_back(name);
        labels.edge(sym(name), sym("label"), en("Name " + std::to_string(j)));
    }

    // --- persons ---
    std::vector<std::string> persons;
    persons.reserve(spec.persons);
    for (std::uint64_t i = 0; i < spec.persons; ++i) {
        std::string person = "Q" + std::to_string(100000 + i);
        persons.push_back(person);
        p31.edge(sym(person), sym("P31"), sym(kHuman));
        if (rng.chance(0.9))
            labels.edge(sym(person), sym("label"), en("Person " + std::to_string(i)));
        if (rng.chance(0.9)) {
            items.edge(sym(person), sym("P735"), sym(names[rng.below(names.size())]));
            if (rng.chance(0.05))
                items.edge(sym(person), sym("P735"), sym(names[rng.below(names.size())]));
        }
    }

    // --- publications with authors and subjects ---
    for (std::uint64_t k = 0; k < spec.publications; ++k) {
        std::string pub = "Q" + std::to_string(7000000 + k);
        const std::string& cls = publication_classes.empty()
                                     ? kPublication
                                     : publication_classes[rng.below(publication_classes.size())];
        p31.edge(sym(pub), sym("P31"), rng.chance(0.1) ? sym(kPublication) : sym(cls));
        if (rng.chance(0.8))
            labels.edge(sym(pub), sym("label"), en("Publication " + std::to_string(k)));

        std::uint64_t n_authors = 1 + rng.below(spec.max_authors_per_pub);
        std::set<std::string> author_guard; // distinct authors per publication
        for (std::uint64_t a = 0; a < n_authors && !persons.empty(); ++a) {
            const std::string& person = persons[rng.below(persons.size())];
            if (author_guard.insert(person).second)
                items.edge(sym(pub), sym("P50"), sym(person));
        }
        if (rng.chance(0.6)) {
            const std::string& subject =
                rng.chance(0.5) && !cancer_classes.empty()
                    ? cancer_classes[rng.below(cancer_classes.size())]
                    : all_classes[rng.below(all_classes.size())];
            items.edge(sym(pub), sym("P921"), sym(subject));
            if (rng.chance(0.3))
                items.edge(sym(pub), sym("P921"),
                           sym(all_classes[rng.below(all_classes.size())]));
        }
        time_file.edge(sym(pub), sym("P577"), Value::integer(1990 + static_cast<std::int64_t>(rng.below(30))));
    }

    // --- misc entities instanced across the hierarchy (film data etc.) ---
    std::vector<std::string> misc;
    for (std::uint64_t m = 0; m < spec.persons / 2 + 1; ++m) {
        std::string entity = "Q" + std::to_string(9000000 + m);
        misc.push_back(entity);
        p31.edge(sym(entity), sym("P31"), sym(all_classes[rng.below(all_classes.size())]));
        if (rng.chance(0.7))
            labels.edge(sym(entity), sym("label"), en("Thing " + std::to_string(m)));
    }

    // --- external identifiers and the ULAN node list ---
    std::vector<std::string> ulan_ids;
    for (std::uint64_t i = 0; i < spec.persons; ++i) {
        if (i % 3 != 0) continue;
        std::string ulan = std::to_string(500000000 + i);
        external_ids.edge(sym(persons[i]), sym("P245"), Value::string(ulan));
        ulan_ids.push_back(ulan);
        if (rng.chance(spec.identifier_coverage)) {
            std::string viaf = std::to_string(20000000 + i);
            external_ids.edge(sym(persons[i]), sym("P214"), Value::string(viaf));
        }
    }

    {
        // node-list file: one ULAN identifier per row, label/node2 empty
        EdgeWriter ulan = EdgeWriter::open_path(
            (dir / "ulan.tsv").string(),
            ColumnSchema::from_columns({"node1", "label", "node2"}, false));
        for (const std::string& id : ulan_ids) {
            ulan.write({Value::string(id), Value(), Value()});
            if (rng.chance(0.25)) // identifiers unknown to the KG
                ulan.write({Value::string("9" + id), Value(), Value()});
        }
        ulan.close();
    }

    // --- noisy infobox-style edges ---
    for (std::uint64_t i = 0; i < spec.persons; ++i) {
        if (!rng.chance(0.4)) continue;
        Value spouse;
        if (rng.chance(spec.noisy_literal_fraction)) {
            spouse = en("Spouse of person " + std::to_string(i));
        } else if (rng.chance(0.1) && !misc.empty()) {
            spouse = sym(misc[rng.below(misc.size())]); // not a human
        } else {
            spouse = sym(persons[rng.below(persons.size())]);
        }
        infobox.edge(sym(persons[i]), sym("property:spouse"), spouse);
        if (rng.chance(0.3))
            infobox.edge(sym(persons[i]), sym("property:occupation"),
                         en("Occupation " + std::to_string(rng.below(20))));
    }

    std::vector<std::string> paths = {p31.path,          p279.path,    items.path,
                                      labels.path,       external_ids.path, infobox.path,
                                      (dir / "ulan.tsv").string(), time_file.path};
    p31.writer.close();
    p279.writer.close();
    items.writer.close();
    labels.writer.close();
    external_ids.writer.close();
    infobox.writer.close();
    time_file.writer.close();
    return paths;
}

std::uint64_t closure_p279star(const std::string& p279_file, const std::string& out_file) {
    EdgeReader reader = EdgeReader::open_path(p279_file, true);
    const ColumnSchema& schema = reader.schema();

    std::vector<std::string> order; // first-appearance order of classes
    std::map<std::string, std::vector<std::string>> parents;
    auto note = [&](const std::string& node) {
        if (!parents.count(node)) {
            parents[node] = {};
            order.push_back(node);
        }
    };

    Record row;
    while (reader.next(row)) {
        const Value& child = row[static_cast<std::size_t>(schema.node1)];
        const Value& parent = row[static_cast<std::size_t>(schema.node2)];
        if (child.is_empty() || parent.is_empty())
            throw SemanticError("subclass edge with empty endpoint in " + p279_file);
        note(child.format());
        note(parent.format());
        parents[child.format()].push_back(parent.format());
    }

    // ancestors-or-self per class, memoized DFS with cycle detection
    std::map<std::string, std::set<std::string>> closure;
    std::set<std::string> in_progress;
    std::function<const std::set<std::string>&(const std::string&)> ancestors =
        [&](const std::string& node) -> const std::set<std::string>& {
        auto it = closure.find(node);
        if (it != closure.end()) return it->second;
        if (!in_progress.insert(node).second)
            throw SemanticError("subclass cycle detected at class " + node);
        std::set<std::string> acc = {node};
        for (const std::string& parent : parents[node]) {
            const std::set<std::string>& up = ancestors(parent);
            acc.insert(up.begin(), up.end());
        }
        in_progress.erase(node);
        return closure.emplace(node, std::move(acc)).first->second;
    };

    EdgeWriter writer = EdgeWriter::open_path(
        out_file, ColumnSchema::from_columns({"node1", "label", "node2"}, false));
    Value label = Value::symbol("P279star");
    for (const std::string& node : order) {
        for (const std::string& ancestor : ancestors(node))
            writer.write({Value::parse(node), label, Value::parse(ancestor)});
    }
    return writer.close();
}

} // namespace kypher
