#include "rejopt/reject_model.hpp"

#include <istream>
#include <ostream>

#include "rejopt/serialize.hpp"

namespace rejopt {

std::vector<double> RejectModel::replica_decisions(std::span<const double> x) const
{
    if (x.size() != original_dims) {
        fail(ErrorCode::DimensionMismatch, "model expects " + std::to_string(original_dims) + " features, got " +
                                               std::to_string(x.size()));
    }
    const int replicas = replica_count(classes);
    std::vector<double> extended(original_dims + static_cast<std::size_t>(replicas - 1));
    std::vector<double> values(static_cast<std::size_t>(replicas));
    for (int q = 1; q <= replicas; ++q) {
        extend_point_into(x, q, h, classes, extended);
        values[static_cast<std::size_t>(q - 1)] =
            std::visit([&](const auto& m) { return m.decision(extended); }, scorer);
    }
    return values;
}

RejectModel train_reject_svm(const LabeledDataset& data, double w_r, const SvmParams& params, double h)
{
    const auto replicated = replicate(data, h, w_r);
    return {train_svm(replicated, params), data.dims(), data.classes(), h};
}

RejectModel train_reject_mlp(const LabeledDataset& data, double w_r, const MlpParams& params, double h)
{
    const auto replicated = replicate(data, h, w_r);
    return {train_mlp(replicated, params), data.dims(), data.classes(), h};
}

Prediction predict(const RejectModel& model, std::span<const double> x)
{
    const auto values = model.replica_decisions(x);
    std::vector<ReplicaLabel> labels(values.size());
    for (std::size_t q = 0; q < values.size(); ++q) {
        labels[q] = label_of(values[q]);
    }
    return decode(labels, model.classes);
}

std::vector<double> induced_offsets(const RejectModel& model)
{
    if (const auto* svm = std::get_if<SvmModel>(&model.scorer)) {
        return induced_offsets(*svm, model.h, model.classes);
    }
    const auto& mlp = std::get<MlpModel>(model.scorer);
    const auto u = mlp.extension_weights();
    std::vector<double> offsets{mlp.output_bias()};
    for (const double w : u) {
        offsets.push_back(mlp.output_bias() + w * model.h);
    }
    return offsets;
}

void save(const RejectModel& model, std::ostream& out)
{
    out << "reject-model 1\n";
    out << "classes " << model.classes << '\n';
    out << "original_dims " << model.original_dims << '\n';
    out << "h " << format_number(model.h) << '\n';
    std::visit([&](const auto& m) { m.save(out); }, model.scorer);
}

RejectModel load_reject_model(std::istream& in)
{
    TokenReader r(in, "reject model");
    r.expect("reject-model");
    r.expect_version(1);
    r.expect("classes");
    RejectModel model;
    model.classes = r.integer();
    if (model.classes < 2) {
        r.error("K must be >= 2");
    }
    r.expect("original_dims");
    model.original_dims = r.count();
    r.expect("h");
    model.h = r.number();
    const auto pos = in.tellg();
    const std::string kind = r.word();
    in.seekg(pos);
    if (kind == "svm") {
        model.scorer = SvmModel::load(in);
    } else if (kind == "mlp") {
        model.scorer = MlpModel::load(in);
    } else {
        r.error("unknown scorer '" + kind + "'");
    }
    const std::size_t expected = model.original_dims + static_cast<std::size_t>(replica_count(model.classes) - 1);
    const std::size_t dims = std::visit([](const auto& m) { return m.dims(); }, model.scorer);
    if (dims != expected) {
        r.error("scorer width does not match the replication layout");
    }
    return model;
}

}  // namespace rejopt
