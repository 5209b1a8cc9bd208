#include "mtlsched/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "mtlsched/errors.hpp"

namespace mtlsched {

namespace {

static_assert(sizeof(double) == 8, "checkpoint format assumes 64-bit doubles");

std::uint64_t to_le(double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    if constexpr (std::endian::native == std::endian::big) {
        bits = __builtin_bswap64(bits);
    }
    return bits;
}

double from_le(std::uint64_t bits) {
    if constexpr (std::endian::native == std::endian::big) {
        bits = __builtin_bswap64(bits);
    }
    double x;
    std::memcpy(&x, &bits, sizeof(x));
    return x;
}

void write_params(const ParamVector& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (double p : params) {
        const std::uint64_t bits = to_le(p);
        out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
    if (!out) throw IoError("short write to '" + path + "'");
}

ParamVector read_params(const std::string& path, std::size_t expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    ParamVector params(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        std::uint64_t bits = 0;
        in.read(reinterpret_cast<char*>(&bits), sizeof(bits));
        if (!in) {
            throw ParseError("'" + path + "' holds fewer than " +
                             std::to_string(expected) + " parameters");
        }
        params[i] = from_le(bits);
    }
    char extra;
    if (in.read(&extra, 1)) {
        throw ParseError("'" + path + "' holds more than " + std::to_string(expected) +
                         " parameters");
    }
    return params;
}

void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("short write to '" + path + "'");
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
    return j;
}

}  // namespace

void save_model_checkpoint(const MtlModel& model, const std::string& meta_path,
                           const std::string& params_path) {
    const MtlShape& shape = model.shape();
    nlohmann::json meta;
    meta["kind"] = "mtl_model";
    meta["input_dim"] = shape.input_dim;
    meta["trunk_hidden"] = shape.trunk_hidden;
    meta["activation"] = shape.activation;
    nlohmann::json heads = nlohmann::json::array();
    for (const HeadSpec& head : shape.heads) {
        heads.push_back({{"output_dim", head.output_dim},
                         {"task", head.kind == TaskKind::regression ? "regression"
                                                                    : "classification"}});
    }
    meta["heads"] = heads;
    meta["param_count"] = model.params().size();
    write_json(meta, meta_path);
    write_params(model.params(), params_path);
}

MtlModel load_model_checkpoint(const std::string& meta_path,
                               const std::string& params_path) {
    const nlohmann::json meta = read_json(meta_path);
    try {
        if (meta.at("kind").get<std::string>() != "mtl_model") {
            throw ParseError("'" + meta_path + "': not a model checkpoint");
        }
        MtlShape shape;
        shape.input_dim = meta.at("input_dim").get<std::size_t>();
        shape.trunk_hidden = meta.at("trunk_hidden").get<std::vector<std::size_t>>();
        shape.activation = meta.at("activation").get<std::string>();
        for (const nlohmann::json& h : meta.at("heads")) {
            HeadSpec head;
            head.output_dim = h.at("output_dim").get<std::size_t>();
            const std::string kind = h.at("task").get<std::string>();
            if (kind == "regression") {
                head.kind = TaskKind::regression;
            } else if (kind == "classification") {
                head.kind = TaskKind::classification;
            } else {
                throw ParseError("'" + meta_path + "': unknown task kind '" + kind + "'");
            }
            shape.heads.push_back(head);
        }
        MtlModel model(std::move(shape));
        const std::size_t expected = meta.at("param_count").get<std::size_t>();
        if (expected != model.params().size()) {
            throw ParseError("'" + meta_path + "': param_count does not match the shape");
        }
        model.params() = read_params(params_path, expected);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("'" + meta_path + "': " + e.what());
    }
}

void save_scheduler_checkpoint(const SchedulerNet& net, const std::string& meta_path,
                               const std::string& params_path) {
    nlohmann::json meta;
    meta["kind"] = "scheduler_net";
    meta["input_dim"] = net.input_dim();
    meta["hidden_dim"] = net.hidden_dim();
    meta["output_dim"] = net.output_dim();
    meta["param_count"] = net.params().size();
    write_json(meta, meta_path);
    write_params(net.params(), params_path);
}

SchedulerNet load_scheduler_checkpoint(const std::string& meta_path,
                                       const std::string& params_path) {
    const nlohmann::json meta = read_json(meta_path);
    try {
        if (meta.at("kind").get<std::string>() != "scheduler_net") {
            throw ParseError("'" + meta_path + "': not a scheduler checkpoint");
        }
        SchedulerNet net(meta.at("input_dim").get<std::size_t>(),
                         meta.at("hidden_dim").get<std::size_t>(),
                         meta.at("output_dim").get<std::size_t>());
        const std::size_t expected = meta.at("param_count").get<std::size_t>();
        if (expected != net.params().size()) {
            throw ParseError("'" + meta_path + "': param_count does not match the shape");
        }
        net.params() = read_params(params_path, expected);
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("'" + meta_path + "': " + e.what());
    }
}

}  // namespace mtlsched
