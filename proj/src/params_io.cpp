#include "sdssar/params_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sdssar/errors.hpp"

namespace sdssar {

namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

using json = nlohmann::json;

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4)) throw CorruptedStack("truncated file");
    return v;
}

void put_f64s(std::ostream& os, const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
}

std::vector<double> get_f64s(std::istream& is, std::size_t n) {
    std::vector<double> v(n);
    if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 8))) {
        throw CorruptedStack("truncated weight block");
    }
    return v;
}

void put_header(std::ostream& os, const char* magic, std::uint32_t version, const json& j) {
    const std::string text = j.dump();
    os.write(magic, 4);
    put_u32(os, version);
    put_u32(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
}

json get_header(std::istream& is, const char* magic, std::uint32_t version) {
    char m[4];
    if (!is.read(m, 4) || std::memcmp(m, magic, 4) != 0) {
        throw CorruptedStack(std::string("bad magic, expected ") + std::string(magic, 4));
    }
    const std::uint32_t v = get_u32(is);
    if (v != version) {
        throw VersionMismatch("file version " + std::to_string(v) + ", supported " +
                              std::to_string(version));
    }
    const std::uint32_t len = get_u32(is);
    std::string text(len, '\0');
    if (!is.read(text.data(), len)) throw CorruptedStack("truncated header");
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw CorruptedStack(std::string("header JSON: ") + e.what());
    }
}

void write_params_block(std::ostream& os, const DespecklerParams& p) {
    put_header(os, "SDSP", kParamsVersion, p.spec.to_json());
    put_f64s(os, p.values);
}

DespecklerParams read_params_block(std::istream& is) {
    DespecklerParams p;
    p.spec = NetworkSpec::from_json(get_header(is, "SDSP", kParamsVersion));
    p.values = get_f64s(is, p.spec.param_count());
    p.validate();
    return p;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path.string());
    return is;
}

json breakdown_json(const LossBreakdown& l) {
    return {{"cyc", l.cyc}, {"reg", l.reg}, {"per", l.per}, {"total", l.total}};
}

}  // namespace

void write_params(const std::filesystem::path& path, const DespecklerParams& params) {
    params.validate();
    auto os = open_out(path);
    write_params_block(os, params);
    if (!os) throw IoError("write failed: " + path.string());
}

DespecklerParams read_params(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_params_block(is);
}

void write_checkpoint(const std::filesystem::path& path, const TrainState& state) {
    state.params.validate();
    json hist = json::array();
    for (const auto& r : state.history) {
        hist.push_back({{"epoch", r.epoch},
                        {"step", r.step},
                        {"lr", r.learning_rate},
                        {"loss", breakdown_json(r.loss)}});
    }
    json meta{{"next_epoch", state.next_epoch},
              {"adam_step", state.adam.step},
              {"history", hist}};
    const std::size_t n = state.params.values.size();
    std::vector<double> m = state.adam.m.empty() ? std::vector<double>(n, 0.0) : state.adam.m;
    std::vector<double> v = state.adam.v.empty() ? std::vector<double>(n, 0.0) : state.adam.v;
    if (m.size() != n || v.size() != n) throw InvalidArgument("checkpoint: Adam state size mismatch");

    // Written to a sibling and renamed so an interrupted run never leaves a torn file.
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        auto os = open_out(tmp);
        put_header(os, "SDSC", kCheckpointVersion, meta);
        write_params_block(os, state.params);
        put_f64s(os, m);
        put_f64s(os, v);
        if (!os) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

TrainState read_checkpoint(const std::filesystem::path& path) {
    auto is = open_in(path);
    const json meta = get_header(is, "SDSC", kCheckpointVersion);
    TrainState s;
    try {
        s.next_epoch = meta.at("next_epoch").get<std::size_t>();
        s.adam.step = meta.at("adam_step").get<std::uint64_t>();
        for (const auto& h : meta.at("history")) {
            StepRecord r;
            r.epoch = h.at("epoch").get<std::size_t>();
            r.step = h.at("step").get<std::size_t>();
            r.learning_rate = h.at("lr").get<double>();
            const auto& l = h.at("loss");
            r.loss = {l.at("cyc").get<double>(), l.at("reg").get<double>(), l.at("per").get<double>(),
                      l.at("total").get<double>()};
            s.history.push_back(r);
        }
    } catch (const json::exception& e) {
        throw CorruptedStack(std::string("checkpoint metadata: ") + e.what());
    }
    s.params = read_params_block(is);
    const std::size_t n = s.params.values.size();
    s.adam.m = get_f64s(is, n);
    s.adam.v = get_f64s(is, n);
    return s;
}

}  // namespace sdssar
