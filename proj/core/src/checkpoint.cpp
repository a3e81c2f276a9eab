#include "lga/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace lga {

namespace {

constexpr char kMagic[8] = {'L', 'G', 'A', 'C', 'K', 'P', 'T', '\0'};

void write_u64(std::ostream& out, std::uint64_t x) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((x >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return x;
}

void write_tensor_data(std::ostream& out, const Tensor& t) {
    // Doubles serialized as little-endian bit patterns for exact round trips.
    for (double d : t.v) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        write_u64(out, bits);
    }
}

void read_tensor_data(std::istream& in, Tensor& t) {
    for (auto& d : t.v) {
        const std::uint64_t bits = read_u64(in);
        std::memcpy(&d, &bits, 8);
    }
}

nlohmann::ordered_json model_config_json(const ModelConfig& c) {
    nlohmann::ordered_json j;
    j["stage_channels"] = c.backbone.stage_channels;
    j["num_classes"] = c.num_classes;
    j["cls_channels"] = c.cls_channels;
    j["loc_channels"] = c.loc_channels;
    j["loc_output"] = c.loc_output == LocOutput::sigmoid ? "sigmoid" : "linear";
    return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.backbone.stage_channels = j.at("stage_channels").get<std::vector<int>>();
    c.num_classes = j.at("num_classes").get<int>();
    c.cls_channels = j.at("cls_channels").get<int>();
    c.loc_channels = j.at("loc_channels").get<std::vector<int>>();
    c.loc_output = j.at("loc_output").get<std::string>() == "sigmoid" ? LocOutput::sigmoid
                                                                      : LocOutput::linear;
    return c;
}

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    nlohmann::ordered_json header;
    header["format_version"] = ckpt.format_version;
    header["model"] = model_config_json(ckpt.params.config);
    header["step"] = ckpt.step;
    header["rng_state"] = std::to_string(ckpt.rng_state);
    header["image_size"] = ckpt.image_size;
    header["class_names"] = ckpt.class_names;
    header["optimizer"] = ckpt.optimizer;
    header["opt_updates"] = ckpt.opt_updates;
    header["has_opt_state"] = !ckpt.opt_m.empty();

    auto& tensors = header["tensors"] = nlohmann::ordered_json::array();
    const auto names = ckpt.params.parameter_names();
    const auto views = ckpt.params.parameter_tensors();
    for (std::size_t i = 0; i < views.size(); ++i) {
        nlohmann::ordered_json t;
        t["name"] = names[i];
        t["shape"] = views[i]->shape;
        tensors.push_back(t);
    }
    const std::string header_str = header.dump();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IOError("cannot open for writing: " + tmp);
        out.write(kMagic, 8);
        write_u64(out, static_cast<std::uint64_t>(ckpt.format_version));
        write_u64(out, header_str.size());
        out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
        for (const auto* t : views) write_tensor_data(out, *t);
        if (!ckpt.opt_m.empty()) {
            for (const auto& t : ckpt.opt_m) write_tensor_data(out, t);
            for (const auto& t : ckpt.opt_v) write_tensor_data(out, t);
        }
        if (!out) throw IOError("short write: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IOError("cannot rename into " + path);
}

namespace {

nlohmann::json read_header(std::istream& in, const std::string& path) {
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw IOError("not a checkpoint file: " + path);
    const auto version = read_u64(in);
    if (version != 1) throw IOError("unsupported checkpoint version in " + path);
    const auto header_len = read_u64(in);
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (in.gcount() != static_cast<std::streamsize>(header_len))
        throw IOError("truncated checkpoint header: " + path);
    return nlohmann::json::parse(header_str);
}

} // namespace

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open: " + path);
    const auto header = read_header(in, path);

    Checkpoint ckpt;
    ckpt.format_version = header.at("format_version").get<int>();
    ModelConfig config = model_config_from_json(header.at("model"));
    ckpt.params = build_model(config, 0);
    ckpt.step = header.at("step").get<long>();
    ckpt.rng_state = std::stoull(header.at("rng_state").get<std::string>());
    ckpt.image_size = header.at("image_size").get<int>();
    ckpt.class_names = header.at("class_names").get<std::vector<std::string>>();
    ckpt.optimizer = header.at("optimizer").get<std::string>();
    ckpt.opt_updates = header.at("opt_updates").get<long>();

    // Shape agreement between the header and the rebuilt model.
    const auto views = ckpt.params.parameter_tensors();
    const auto& tensors = header.at("tensors");
    if (tensors.size() != views.size()) throw IOError("tensor count mismatch in " + path);
    for (std::size_t i = 0; i < views.size(); ++i) {
        const auto shape = tensors[i].at("shape").get<std::vector<int>>();
        if (shape != views[i]->shape) throw IOError("tensor shape mismatch in " + path);
    }
    for (auto* t : views) read_tensor_data(in, *t);

    if (header.at("has_opt_state").get<bool>()) {
        for (const auto* t : views) ckpt.opt_m.emplace_back(t->shape);
        for (const auto* t : views) ckpt.opt_v.emplace_back(t->shape);
        for (auto& t : ckpt.opt_m) read_tensor_data(in, t);
        for (auto& t : ckpt.opt_v) read_tensor_data(in, t);
    }
    if (!in) throw IOError("truncated checkpoint payload: " + path);
    return ckpt;
}

std::string checkpoint_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open: " + path);
    return read_header(in, path).dump(2);
}

} // namespace lga
