#include "robustadapt/dataio.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "robustadapt/errors.hpp"
#include "robustadapt/numerics.hpp"
#include "robustadapt/util.hpp"

static_assert(std::endian::native == std::endian::little,
              "bundle files are little-endian; big-endian hosts are unsupported");

namespace robustadapt {

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw FormatError("unknown split '" + s + "'");
}

const char* shift_kind_name(ShiftKind k) {
    switch (k) {
        case ShiftKind::confounder: return "confounder";
        case ShiftKind::subclass: return "subclass";
        case ShiftKind::data_source: return "data_source";
    }
    return "?";
}

ShiftKind parse_shift_kind(const std::string& s) {
    if (s == "confounder") return ShiftKind::confounder;
    if (s == "subclass") return ShiftKind::subclass;
    if (s == "data_source") return ShiftKind::data_source;
    throw ConfigError("unknown shift kind '" + s + "'");
}

void EmbeddingBundle::validate() const {
    const size_t n = n_samples();
    if (samples.cols != dim || class_embeds.cols != dim)
        throw InvalidSpecError("embedding matrices disagree with dim");
    if (class_labels.size() != n || group_labels.size() != n || splits.size() != n)
        throw InvalidSpecError("label/split vectors must have one entry per sample");
    if (class_names.size() != n_classes())
        throw InvalidSpecError("class_names length != number of class embeddings");
    for (size_t i = 0; i < n; ++i) {
        if (class_labels[i] < 0 || size_t(class_labels[i]) >= n_classes())
            throw InvalidSpecError("class label out of range at row " + std::to_string(i));
        if (group_labels[i] < 0 || size_t(group_labels[i]) >= n_groups())
            throw InvalidSpecError("group label out of range at row " + std::to_string(i));
        bool all_zero = true;
        for (const float x : samples.row(i)) {
            if (x != 0.f) {
                all_zero = false;
                break;
            }
        }
        if (all_zero) throw InvalidSpecError("all-zero sample row " + std::to_string(i));
    }
    if (group_prompt_embeds) {
        if (group_prompt_embeds->cols != dim)
            throw InvalidSpecError("group prompt embeddings disagree with dim");
        if (group_prompt_info.size() != group_prompt_embeds->rows)
            throw InvalidSpecError("group prompt annotations must cover every prompt row");
    } else if (!group_prompt_info.empty()) {
        throw InvalidSpecError("group prompt annotations without prompt embeddings");
    }

    // Every (class, group) cell seen in val/test must also be seen in train.
    std::map<std::pair<int, int>, bool> in_train;
    for (size_t i = 0; i < n; ++i)
        if (splits[i] == Split::train) in_train[{class_labels[i], group_labels[i]}] = true;
    for (size_t i = 0; i < n; ++i) {
        if (splits[i] == Split::train) continue;
        if (!in_train.count({class_labels[i], group_labels[i]}))
            throw InvalidSpecError("(class " + std::to_string(class_labels[i]) + ", group " +
                                   std::to_string(group_labels[i]) + ") appears in " +
                                   split_name(splits[i]) + " but not in train");
    }
}

void ShiftSpec::validate() const {
    if (classes < 2) throw InvalidSpecError("need at least 2 classes");
    if (groups_per_class < 1) throw InvalidSpecError("need at least 1 group per class");
    if (!(minority_fraction > 0.f && minority_fraction <= 0.5f))
        throw InvalidSpecError("minority_fraction must be in (0, 0.5]");
    if (groups_per_class > 1 &&
        minority_fraction > 1.f / float(groups_per_class) + 1e-6f)
        throw InvalidSpecError("minority_fraction must be <= 1/groups_per_class");
    if (class_sep < 0.f || group_sep < 0.f) throw InvalidSpecError("separations must be >= 0");
    if (!(noise_sigma > 0.f)) throw InvalidSpecError("noise_sigma must be > 0");
    if (spurious_mix < 0.f || spurious_mix > 1.f)
        throw InvalidSpecError("spurious_mix must be in [0, 1]");
    if (n_train == 0 || n_val == 0 || n_test == 0)
        throw InvalidSpecError("all split sizes must be positive");

    size_t extra = 0;
    switch (shift_kind) {
        case ShiftKind::confounder: extra = 1; break;
        case ShiftKind::data_source: extra = groups_per_class; break;
        case ShiftKind::subclass: extra = classes * groups_per_class; break;
    }
    const size_t needed = 1 + classes + extra;
    if (dim < needed)
        throw InvalidSpecError("dim " + std::to_string(dim) + " too small; need >= " +
                               std::to_string(needed) + " for this shift geometry");
}

ShiftSpec preset_shift_spec(const std::string& name) {
    ShiftSpec s;
    if (name == "s1") {
        s.shift_kind = ShiftKind::confounder;
        s.classes = 2;
        s.groups_per_class = 2;
        s.dim = 64;
        s.minority_fraction = 0.05f;
        s.class_sep = 1.0f;
        s.group_sep = 1.0f;
        s.spurious_mix = 0.9f;
        s.noise_sigma = 0.15f;
        s.n_train = 1200;
        s.n_val = 400;
        s.n_test = 800;
        s.seed = 7;
    } else if (name == "s2") {
        s.shift_kind = ShiftKind::subclass;
        s.classes = 2;
        s.groups_per_class = 2;
        s.dim = 64;
        s.minority_fraction = 0.5f;  // balanced
        s.class_sep = 1.0f;
        s.group_sep = 1.4f;
        s.spurious_mix = 0.35f;
        s.noise_sigma = 0.2f;
        s.n_train = 1200;
        s.n_val = 400;
        s.n_test = 800;
        s.seed = 13;
    } else if (name == "s3") {
        s.shift_kind = ShiftKind::data_source;
        s.classes = 2;
        s.groups_per_class = 2;
        s.dim = 64;
        s.minority_fraction = 0.1f;
        s.class_sep = 1.0f;
        s.group_sep = 1.2f;
        s.spurious_mix = 0.6f;
        s.noise_sigma = 0.2f;
        s.n_train = 1200;
        s.n_val = 400;
        s.n_test = 800;
        s.seed = 29;
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected s1, s2, or s3)");
    }
    return s;
}

namespace {

std::vector<float> gaussian_vec(Rng& rng, size_t dim) {
    std::vector<float> v(dim);
    for (auto& x : v) x = float(rng.gaussian());
    return v;
}

// Draws a unit vector orthogonal to `basis` (Gram-Schmidt), appends it.
std::vector<float> next_orthonormal(Rng& rng, size_t dim, std::vector<std::vector<float>>& basis) {
    for (int attempt = 0; attempt < 16; ++attempt) {
        std::vector<float> v = gaussian_vec(rng, dim);
        for (const auto& b : basis) {
            const double p = detail::dot(std::span<const float>(v), std::span<const float>(b));
            for (size_t i = 0; i < dim; ++i) v[i] = float(v[i] - p * b[i]);
        }
        const double n = detail::norm(std::span<const float>(v));
        if (n > 1e-6) {
            for (auto& x : v) x = float(x / n);
            basis.push_back(v);
            return v;
        }
    }
    throw InvalidSpecError("failed to draw an orthonormal direction; dim too small");
}

std::vector<float> unit_combination(std::span<const float> a, float wa, std::span<const float> b,
                                    float wb) {
    std::vector<float> v(a.size());
    for (size_t i = 0; i < a.size(); ++i) v[i] = wa * a[i] + wb * b[i];
    return l2_normalize(v);
}

// Largest-remainder apportionment of `total` across weighted cells with a
// per-cell minimum. Remainder ties resolve to the lower cell index.
std::vector<size_t> allocate_counts(size_t total, const std::vector<double>& weights,
                                    size_t min_per_cell) {
    const size_t cells = weights.size();
    if (total < cells * min_per_cell)
        throw TooFewSamplesError("cannot allocate " + std::to_string(total) + " samples over " +
                                 std::to_string(cells) + " cells with minimum " +
                                 std::to_string(min_per_cell));
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<size_t> counts(cells);
    std::vector<std::pair<double, size_t>> rema(cells);
    size_t assigned = 0;
    for (size_t i = 0; i < cells; ++i) {
        const double ideal = double(total) * weights[i] / wsum;
        counts[i] = size_t(ideal);
        rema[i] = {ideal - double(counts[i]), i};
        assigned += counts[i];
    }
    std::stable_sort(rema.begin(), rema.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (size_t k = 0; assigned < total; ++k, ++assigned) counts[rema[k % cells].second]++;

    // Lift starved cells to the minimum, taking from the currently largest.
    for (size_t i = 0; i < cells; ++i) {
        while (counts[i] < min_per_cell) {
            size_t donor = 0;
            for (size_t j = 1; j < cells; ++j)
                if (counts[j] > counts[donor]) donor = j;
            counts[donor]--;
            counts[i]++;
        }
    }
    return counts;
}

}  // namespace

EmbeddingBundle generate_synthetic(const ShiftSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    const size_t C = spec.classes;
    const size_t G = spec.groups_per_class;
    const size_t D = spec.dim;

    std::vector<std::vector<float>> basis;
    const std::vector<float> center = next_orthonormal(rng, D, basis);
    std::vector<std::vector<float>> class_dirs(C);
    for (size_t y = 0; y < C; ++y) class_dirs[y] = next_orthonormal(rng, D, basis);

    // Per-(class, group) offset directions, by shift kind.
    std::vector<std::vector<std::vector<float>>> group_dirs(C,
                                                            std::vector<std::vector<float>>(G));
    switch (spec.shift_kind) {
        case ShiftKind::confounder: {
            // One spurious direction shared across classes with alternating
            // sign; majority groups sit on the +side of their class mean.
            const std::vector<float> spurious = next_orthonormal(rng, D, basis);
            for (size_t y = 0; y < C; ++y) {
                const float sign = (y % 2 == 0) ? 1.f : -1.f;
                for (size_t g = 0; g < G; ++g) {
                    std::vector<float> d = spurious;
                    const float s = (g == 0) ? sign : -sign;
                    for (auto& x : d) x *= s;
                    group_dirs[y][g] = std::move(d);
                }
            }
            break;
        }
        case ShiftKind::data_source: {
            // One offset per source, shared across classes.
            std::vector<std::vector<float>> sources(G);
            for (size_t g = 0; g < G; ++g) sources[g] = next_orthonormal(rng, D, basis);
            for (size_t y = 0; y < C; ++y)
                for (size_t g = 0; g < G; ++g) group_dirs[y][g] = sources[g];
            break;
        }
        case ShiftKind::subclass: {
            for (size_t y = 0; y < C; ++y)
                for (size_t g = 0; g < G; ++g) group_dirs[y][g] = next_orthonormal(rng, D, basis);
            break;
        }
    }

    std::vector<std::vector<float>> class_means(C);
    for (size_t y = 0; y < C; ++y)
        class_means[y] = unit_combination(center, 1.f, class_dirs[y], spec.class_sep);

    std::vector<std::vector<std::vector<float>>> group_means(C,
                                                             std::vector<std::vector<float>>(G));
    for (size_t y = 0; y < C; ++y)
        for (size_t g = 0; g < G; ++g)
            group_means[y][g] =
                unit_combination(class_means[y], 1.f, group_dirs[y][g], spec.group_sep);

    EmbeddingBundle b;
    b.dim = D;
    b.class_embeds = Matrix(C, D);
    for (size_t y = 0; y < C; ++y) {
        const auto v = unit_combination(class_means[y], 1.f - spec.spurious_mix, group_means[y][0],
                                        spec.spurious_mix);
        std::copy(v.begin(), v.end(), b.class_embeds.row(y).begin());
    }

    Matrix prompts(C * G, D);
    for (size_t y = 0; y < C; ++y) {
        for (size_t g = 0; g < G; ++g) {
            std::copy(group_means[y][g].begin(), group_means[y][g].end(),
                      prompts.row(y * G + g).begin());
            b.group_prompt_info.push_back({int(y), int(g)});
        }
    }
    b.group_prompt_embeds = std::move(prompts);

    for (size_t y = 0; y < C; ++y) b.class_names.push_back("class" + std::to_string(y));
    for (size_t g = 0; g < G; ++g) b.group_names.push_back("group" + std::to_string(g));

    // Cell weights: group 0 is the majority, each other group takes
    // minority_fraction of the class.
    std::vector<double> train_cell_weights(G, double(spec.minority_fraction));
    train_cell_weights[0] = 1.0 - double(spec.minority_fraction) * double(G - 1);
    const std::vector<double> balanced(G, 1.0);
    const std::vector<double> class_weights(C, 1.0);

    const size_t total = spec.n_train + spec.n_val + spec.n_test;
    b.samples = Matrix(total, D);
    size_t row = 0;
    const Split split_order[3] = {Split::train, Split::val, Split::test};
    const size_t split_sizes[3] = {spec.n_train, spec.n_val, spec.n_test};
    for (int si = 0; si < 3; ++si) {
        const auto per_class = allocate_counts(split_sizes[si], class_weights, G);
        for (size_t y = 0; y < C; ++y) {
            const auto& weights =
                (split_order[si] == Split::train) ? train_cell_weights : balanced;
            const auto per_cell = allocate_counts(per_class[y], weights, 1);
            for (size_t g = 0; g < G; ++g) {
                for (size_t k = 0; k < per_cell[g]; ++k) {
                    std::vector<float> x(D);
                    for (size_t i = 0; i < D; ++i)
                        x[i] = group_means[y][g][i] + spec.noise_sigma * float(rng.gaussian());
                    const auto unit = l2_normalize(x);
                    std::copy(unit.begin(), unit.end(), b.samples.row(row).begin());
                    b.class_labels.push_back(int(y));
                    b.group_labels.push_back(int(g));
                    b.splits.push_back(split_order[si]);
                    ++row;
                }
            }
        }
    }

    b.validate();
    return b;
}

// ---------------------------------------------------------------------------
// Bundle directory format
// ---------------------------------------------------------------------------

namespace {

std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (size_t i = 0; i < names.size(); ++i) {
        if (names[i].find(',') != std::string::npos || names[i].find('\n') != std::string::npos)
            throw FormatError("name '" + names[i] + "' may not contain commas or newlines");
        if (i) out += ',';
        out += names[i];
    }
    return out;
}

std::vector<std::string> split_names(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string matrix_bytes(const Matrix& m) {
    std::string bytes(m.data.size() * sizeof(float), '\0');
    std::memcpy(bytes.data(), m.data.data(), bytes.size());
    return bytes;
}

Matrix read_matrix_file(const std::filesystem::path& p, size_t rows, size_t cols,
                        const char* field) {
    const auto bytes = read_file_bytes(p);
    const size_t expected = rows * cols * sizeof(float);
    if (bytes.size() != expected)
        throw FormatError(std::string(field) + ": expected " + std::to_string(expected) +
                          " bytes (" + std::to_string(rows) + "x" + std::to_string(cols) +
                          " f32), found " + std::to_string(bytes.size()));
    Matrix m(rows, cols);
    std::memcpy(m.data.data(), bytes.data(), expected);
    return m;
}

std::map<std::string, std::string> parse_manifest(const std::filesystem::path& p) {
    const auto bytes = read_file_bytes(p);
    std::map<std::string, std::string> kv;
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos)
            throw FormatError("manifest.txt line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return kv;
}

const std::string& manifest_get(const std::map<std::string, std::string>& kv,
                                const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("manifest.txt: missing key '" + key + "'");
    return it->second;
}

size_t parse_count(const std::string& s, const std::string& field) {
    try {
        size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing junk");
        return size_t(v);
    } catch (const std::exception&) {
        throw FormatError(field + ": expected a count, got '" + s + "'");
    }
}

}  // namespace

void save_bundle(const EmbeddingBundle& b, const std::filesystem::path& dir) {
    b.validate();
    std::filesystem::create_directories(dir);

    const size_t prompt_rows = b.group_prompt_embeds ? b.group_prompt_embeds->rows : 0;
    std::ostringstream manifest;
    manifest << "format_version = 1\n";
    manifest << "dim = " << b.dim << "\n";
    manifest << "n_samples = " << b.n_samples() << "\n";
    manifest << "n_classes = " << b.n_classes() << "\n";
    manifest << "n_groups = " << b.n_groups() << "\n";
    manifest << "class_names = " << join_names(b.class_names) << "\n";
    manifest << "group_names = " << join_names(b.group_names) << "\n";
    manifest << "group_prompt_rows = " << prompt_rows << "\n";
    atomic_write_file(dir / "manifest.txt", manifest.str());

    atomic_write_file(dir / "embeddings.bin", matrix_bytes(b.samples));
    atomic_write_file(dir / "class_embeddings.bin", matrix_bytes(b.class_embeds));

    std::ostringstream labels;
    labels << "index,class,group,split\n";
    for (size_t i = 0; i < b.n_samples(); ++i)
        labels << i << ',' << b.class_labels[i] << ',' << b.group_labels[i] << ','
               << split_name(b.splits[i]) << "\n";
    atomic_write_file(dir / "labels.csv", labels.str());

    if (b.group_prompt_embeds) {
        atomic_write_file(dir / "group_prompts.bin", matrix_bytes(*b.group_prompt_embeds));
        std::ostringstream pcsv;
        pcsv << "row,class,group\n";
        for (size_t i = 0; i < b.group_prompt_info.size(); ++i)
            pcsv << i << ',' << b.group_prompt_info[i].class_id << ','
                 << b.group_prompt_info[i].group_id << "\n";
        atomic_write_file(dir / "group_prompts.csv", pcsv.str());
    }
}

EmbeddingBundle load_bundle(const std::filesystem::path& dir) {
    const auto kv = parse_manifest(dir / "manifest.txt");
    const std::string& version = manifest_get(kv, "format_version");
    if (version != "1")
        throw VersionMismatchError("bundle format_version '" + version + "', expected 1");

    EmbeddingBundle b;
    b.dim = parse_count(manifest_get(kv, "dim"), "manifest dim");
    const size_t n = parse_count(manifest_get(kv, "n_samples"), "manifest n_samples");
    const size_t c = parse_count(manifest_get(kv, "n_classes"), "manifest n_classes");
    const size_t g = parse_count(manifest_get(kv, "n_groups"), "manifest n_groups");
    b.class_names = split_names(manifest_get(kv, "class_names"));
    b.group_names = split_names(manifest_get(kv, "group_names"));
    if (b.class_names.size() != c)
        throw FormatError("manifest class_names: expected " + std::to_string(c) + " entries, got " +
                          std::to_string(b.class_names.size()));
    if (b.group_names.size() != g)
        throw FormatError("manifest group_names: expected " + std::to_string(g) + " entries, got " +
                          std::to_string(b.group_names.size()));
    const size_t prompt_rows =
        parse_count(manifest_get(kv, "group_prompt_rows"), "manifest group_prompt_rows");

    b.samples = read_matrix_file(dir / "embeddings.bin", n, b.dim, "embeddings.bin");
    b.class_embeds = read_matrix_file(dir / "class_embeddings.bin", c, b.dim,
                                      "class_embeddings.bin");

    {
        const auto bytes = read_file_bytes(dir / "labels.csv");
        std::istringstream in(std::string(bytes.begin(), bytes.end()));
        std::string line;
        if (!std::getline(in, line) || line != "index,class,group,split")
            throw FormatError("labels.csv: bad header '" + line + "'");
        size_t rowno = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string f0, f1, f2, f3;
            if (!std::getline(ls, f0, ',') || !std::getline(ls, f1, ',') ||
                !std::getline(ls, f2, ',') || !std::getline(ls, f3))
                throw FormatError("labels.csv row " + std::to_string(rowno) +
                                  ": expected 4 fields");
            if (parse_count(f0, "labels.csv index") != rowno)
                throw FormatError("labels.csv row " + std::to_string(rowno) +
                                  ": index field is " + f0);
            const size_t cls = parse_count(f1, "labels.csv class");
            const size_t grp = parse_count(f2, "labels.csv group");
            if (cls >= c)
                throw FormatError("labels.csv row " + std::to_string(rowno) + ": class " + f1 +
                                  " out of range (n_classes " + std::to_string(c) + ")");
            if (grp >= g)
                throw FormatError("labels.csv row " + std::to_string(rowno) + ": group " + f2 +
                                  " out of range (n_groups " + std::to_string(g) + ")");
            b.class_labels.push_back(int(cls));
            b.group_labels.push_back(int(grp));
            b.splits.push_back(parse_split(f3));
            ++rowno;
        }
        if (rowno != n)
            throw FormatError("labels.csv: expected " + std::to_string(n) + " rows, found " +
                              std::to_string(rowno));
    }

    if (prompt_rows > 0) {
        b.group_prompt_embeds =
            read_matrix_file(dir / "group_prompts.bin", prompt_rows, b.dim, "group_prompts.bin");
        const auto bytes = read_file_bytes(dir / "group_prompts.csv");
        std::istringstream in(std::string(bytes.begin(), bytes.end()));
        std::string line;
        if (!std::getline(in, line) || line != "row,class,group")
            throw FormatError("group_prompts.csv: bad header '" + line + "'");
        size_t rowno = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string f0, f1, f2;
            if (!std::getline(ls, f0, ',') || !std::getline(ls, f1, ',') || !std::getline(ls, f2))
                throw FormatError("group_prompts.csv row " + std::to_string(rowno) +
                                  ": expected 3 fields");
            const size_t cls = parse_count(f1, "group_prompts.csv class");
            const size_t grp = parse_count(f2, "group_prompts.csv group");
            if (cls >= c || grp >= g)
                throw FormatError("group_prompts.csv row " + std::to_string(rowno) +
                                  ": class/group out of range");
            b.group_prompt_info.push_back({int(cls), int(grp)});
            ++rowno;
        }
        if (rowno != prompt_rows)
            throw FormatError("group_prompts.csv: expected " + std::to_string(prompt_rows) +
                              " rows, found " + std::to_string(rowno));
    }

    b.validate();
    return b;
}

uint64_t bundle_checksum(const std::filesystem::path& dir) {
    uint64_t h = 0xCBF29CE484222325ull;
    const char* files[] = {"manifest.txt", "embeddings.bin", "class_embeddings.bin", "labels.csv",
                           "group_prompts.bin", "group_prompts.csv"};
    for (const char* f : files) {
        const auto p = dir / f;
        if (!std::filesystem::exists(p)) continue;
        const auto bytes = read_file_bytes(p);
        h = fnv1a64(bytes, h);
    }
    return h;
}

std::vector<size_t> split_view(const EmbeddingBundle& b, Split split) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < b.splits.size(); ++i)
        if (b.splits[i] == split) idx.push_back(i);
    return idx;
}

EmbeddingBundle subsample_preserving_ratios(const EmbeddingBundle& b, size_t n, Rng& rng) {
    const auto train = split_view(b, Split::train);
    if (n > train.size())
        throw TooFewSamplesError("requested " + std::to_string(n) + " train samples, have " +
                                 std::to_string(train.size()));

    // Cells keyed (class, group) in ascending order; quotas proportional to
    // current sizes, at least one sample each.
    std::map<std::pair<int, int>, std::vector<size_t>> cells;
    for (const size_t i : train) cells[{b.class_labels[i], b.group_labels[i]}].push_back(i);

    std::vector<double> weights;
    std::vector<const std::vector<size_t>*> cell_rows;
    for (const auto& [key, rows] : cells) {
        weights.push_back(double(rows.size()));
        cell_rows.push_back(&rows);
    }
    const auto quotas = allocate_counts(n, weights, 1);

    std::vector<uint8_t> keep(b.n_samples(), 0);
    for (size_t i = 0; i < b.n_samples(); ++i)
        if (b.splits[i] != Split::train) keep[i] = 1;
    for (size_t ci = 0; ci < cell_rows.size(); ++ci) {
        const auto& rows = *cell_rows[ci];
        auto picks = rng.sample_without_replacement(rows.size(), quotas[ci]);
        std::sort(picks.begin(), picks.end());
        for (const size_t p : picks) keep[rows[p]] = 1;
    }

    EmbeddingBundle out;
    out.dim = b.dim;
    out.class_embeds = b.class_embeds;
    out.class_names = b.class_names;
    out.group_names = b.group_names;
    out.group_prompt_embeds = b.group_prompt_embeds;
    out.group_prompt_info = b.group_prompt_info;
    size_t kept = 0;
    for (const uint8_t k : keep) kept += k;
    out.samples = Matrix(kept, b.dim);
    size_t row = 0;
    for (size_t i = 0; i < b.n_samples(); ++i) {
        if (!keep[i]) continue;
        std::copy(b.samples.row(i).begin(), b.samples.row(i).end(), out.samples.row(row).begin());
        out.class_labels.push_back(b.class_labels[i]);
        out.group_labels.push_back(b.group_labels[i]);
        out.splits.push_back(b.splits[i]);
        ++row;
    }
    out.validate();
    return out;
}

}  // namespace robustadapt
