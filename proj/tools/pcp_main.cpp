// Command-line frontend: cohort generation, training, strategy evaluation,
// similarity analysis, distillation benchmarks and embedding export.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.

#include <cstdio>
#include <cstdlib>
#include <future>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcp/pcp.hpp"

namespace {

using namespace pcp;

std::string out_path(const std::string& flag_value, const std::string& default_name) {
    if (!flag_value.empty()) return flag_value;
    const char* dir = std::getenv("PCP_OUT_DIR");
    if (dir && *dir) return std::string(dir) + "/" + default_name;
    return default_name;
}

std::vector<std::uint8_t> parse_leads(const std::string& csv) {
    std::vector<std::uint8_t> leads;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        const std::string tok = csv.substr(pos, next - pos);
        if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
            throw UsageError("leads: expected comma-separated integers, got '" + csv + "'");
        const unsigned long v = std::stoul(tok);
        if (v > 11) throw UsageError("leads: lead ids must be in 0..11, got " + tok);
        leads.push_back(static_cast<std::uint8_t>(v));
        pos = next + 1;
    }
    if (leads.empty()) throw UsageError("leads: empty list");
    return leads;
}

std::vector<double> parse_doubles(const std::string& csv, const char* what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        try {
            out.push_back(std::stod(csv.substr(pos, next - pos)));
        } catch (const std::exception&) {
            throw UsageError(std::string(what) + ": bad number in '" + csv + "'");
        }
        pos = next + 1;
    }
    if (out.empty()) throw UsageError(std::string(what) + ": empty list");
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
    std::vector<std::uint64_t> out;
    for (double v : parse_doubles(csv, "seeds")) out.push_back(static_cast<std::uint64_t>(v));
    return out;
}

std::map<std::uint32_t, std::uint16_t> patient_labels(const EcgDataset& ds) {
    std::map<std::uint32_t, std::uint16_t> labels;
    for (const EcgFrame& f : ds.frames) labels[f.patient_id] = f.label;
    return labels;
}

std::vector<PatientReps> group_reps(const EcgDataset& ds, const Matrix& reps) {
    std::map<std::uint32_t, std::vector<std::size_t>> rows;
    for (std::size_t i = 0; i < ds.frames.size(); ++i) rows[ds.frames[i].patient_id].push_back(i);
    std::vector<PatientReps> out;
    for (auto& [id, idx] : rows) out.push_back({id, reps.take_rows(idx)});
    return out;
}

// ---------------------------------------------------------------------------

struct GenArgs {
    std::uint32_t patients = 40;
    std::uint32_t frames = 20;
    std::uint16_t classes = 4;
    std::string leads = "0";
    double noise = 0.01;
    std::uint64_t seed = 7;
    std::string out;
    std::string csv;
};

int cmd_gen(const GenArgs& a) {
    CohortConfig cfg;
    cfg.num_patients = a.patients;
    cfg.frames_per_patient = a.frames;
    cfg.num_classes = a.classes;
    cfg.leads = parse_leads(a.leads);
    cfg.noise_level = a.noise;
    cfg.seed = a.seed;
    EcgDataset ds = generate_synthetic_cohort(cfg);
    const std::string path = out_path(a.out, "cohort.pcpd");
    save_dataset(ds, path);
    if (!a.csv.empty()) export_dataset_csv(ds, a.csv);
    std::printf("wrote %s: %zu patients, %zu frames, %u classes, %zu leads\n", path.c_str(),
                ds.patients().size(), ds.frames.size(), ds.num_classes, cfg.leads.size());
    return 0;
}

struct TrainArgs {
    std::string data;
    std::size_t emb = 128;
    std::size_t batch = 256;
    double lr = 1e-4;
    double tau = 0.1;
    std::size_t epochs = 20;
    std::uint64_t seed = 0;
    std::string reduction = "sum";
    std::string out;
    std::string metrics;
    std::string manifest;
};

int cmd_train(const TrainArgs& a) {
    EcgDataset ds = load_dataset(a.data);
    auto splits = patient_split(ds, SplitRatios{}, a.seed);

    TrainConfig cfg;
    cfg.embed_dim = a.emb;
    cfg.batch_size = a.batch;
    cfg.learning_rate = a.lr;
    cfg.tau = a.tau;
    cfg.epochs = a.epochs;
    cfg.seed = a.seed;
    if (a.reduction == "sum") cfg.reduction = Reduction::sum;
    else if (a.reduction == "mean") cfg.reduction = Reduction::mean;
    else throw UsageError("train: --reduction must be sum or mean");

    TrainResult result = train_model(splits[0], cfg);
    const std::string ckpt = out_path(a.out, "model.pcpm");
    save_model(result.model, ckpt);

    CsvWriter metrics(out_path(a.metrics, "metrics.csv"));
    metrics.line("epoch,contrastive_loss,supervised_loss,train_auc");
    for (const EpochMetrics& m : result.metrics)
        metrics.line(std::to_string(m.epoch) + "," + format_double(m.contrastive_loss) + "," +
                     format_double(m.supervised_loss) + "," + format_double(m.train_auc));
    metrics.close();

    CsvWriter manifest(out_path(a.manifest, "splits.csv"));
    manifest.line("patient_id,split");
    for (const EcgDataset& split : splits)
        for (std::uint32_t id : split.patients())
            manifest.line(std::to_string(id) + "," + split_name(split.split_tag));
    manifest.close();

    std::printf("trained %zu epochs on %zu frames (%zu patients); checkpoint %s\n", cfg.epochs,
                splits[0].frames.size(), splits[0].patients().size(), ckpt.c_str());
    std::printf("final: contrastive %.6f, supervised %.6f, train_auc %.4f\n",
                result.metrics.back().contrastive_loss, result.metrics.back().supervised_loss,
                result.metrics.back().train_auc);
    return 0;
}

struct EvalArgs {
    std::string data;
    std::string ckpt;
    double tau = 0.1;
    std::uint64_t seed = 0;
    std::size_t emb = 0;  // 0 = take from checkpoint
    std::string strategies = "nearest,nearest10,mean,similarity_weighted_mean";
    std::string out;
};

int cmd_eval(const EvalArgs& a) {
    EcgDataset ds = load_dataset(a.data);
    PcpModel model = load_model(a.ckpt);
    if (a.emb != 0 && a.emb != model.embed_dim)
        throw UsageError("eval: --emb " + std::to_string(a.emb) + " does not match checkpoint E=" +
                         std::to_string(model.embed_dim));
    auto splits = patient_split(ds, SplitRatios{}, a.seed);
    const EcgDataset& test = splits[2];
    Matrix reps = encode_dataset(model, frames_matrix(test));
    auto labels = frame_labels(test);

    CsvWriter csv(out_path(a.out, "eval.csv"));
    csv.line("strategy,E,seed,auc");
    std::size_t pos = 0;
    while (pos < a.strategies.size()) {
        std::size_t next = a.strategies.find(',', pos);
        if (next == std::string::npos) next = a.strategies.size();
        const Strategy strat = parse_strategy(a.strategies.substr(pos, next - pos));
        Matrix posteriors = predict_from_reps(model, reps, strat, a.tau);
        const double auc = macro_auc(posteriors, labels);
        csv.line(strategy_name(strat) + "," + std::to_string(model.embed_dim) + "," +
                 std::to_string(a.seed) + "," + format_double(auc));
        std::printf("%-26s auc %.4f\n", strategy_name(strat).c_str(), auc);
        pos = next + 1;
    }
    csv.close();
    return 0;
}

struct SimilarityArgs {
    std::string data;
    std::string ckpt;
    std::string ckpt_b;
    std::string metric = "euclidean";
    std::uint64_t seed = 0;
    std::string thresholds;
    std::string out_dir = ".";
};

int cmd_similarity(const SimilarityArgs& a) {
    const Metric metric = parse_metric(a.metric);
    PcpModel model = load_model(a.ckpt);
    const std::string dir = a.out_dir;

    if (!a.ckpt_b.empty()) {
        // Cross-dataset mode: compare two prototype banks of equal E.
        PcpModel other = load_model(a.ckpt_b);
        if (other.embed_dim != model.embed_dim)
            throw UsageError("similarity: embedding dims differ (" + std::to_string(model.embed_dim) +
                             " vs " + std::to_string(other.embed_dim) + ")");
        std::vector<PatientReps> rows, cols;
        const Matrix bank_a = model.prototype_matrix();
        const Matrix bank_b = other.prototype_matrix();
        for (std::size_t p = 0; p < bank_a.rows; ++p)
            rows.push_back({model.prototype_patient_ids[p], bank_a.take_rows({p})});
        for (std::size_t p = 0; p < bank_b.rows; ++p)
            cols.push_back({other.prototype_patient_ids[p], bank_b.take_rows({p})});
        DistanceMatrix dm = patient_distance_matrix(rows, cols, metric);
        export_distance_matrix_csv(dm, dir + "/matrix.csv");
        CsvWriter pairs(dir + "/pairs.csv");
        pairs.line("kind,row_patient,col_patient,distance");
        const PatientPair most = most_similar_pair(dm);
        const PatientPair least = least_similar_pair(dm);
        pairs.line("most," + std::to_string(most.row_patient) + "," + std::to_string(most.col_patient) +
                   "," + format_double(most.distance));
        pairs.line("least," + std::to_string(least.row_patient) + "," +
                   std::to_string(least.col_patient) + "," + format_double(least.distance));
        pairs.close();
        std::printf("cross-bank matrix %zux%zu; most similar (%u, %u) at %.6f\n", dm.values.rows,
                    dm.values.cols, most.row_patient, most.col_patient, most.distance);
        return 0;
    }

    EcgDataset ds = load_dataset(a.data);
    auto splits = patient_split(ds, SplitRatios{}, a.seed);
    const EcgDataset& train = splits[0];
    const EcgDataset& val = splits[1];

    Matrix train_reps = encode_dataset(model, frames_matrix(train));
    Matrix val_reps = encode_dataset(model, frames_matrix(val));
    std::vector<PatientReps> train_groups = group_reps(train, train_reps);
    std::vector<PatientReps> val_groups = group_reps(val, val_reps);

    const Matrix bank = model.prototype_matrix();
    DistanceDistributions dist = distance_distributions(bank, model.prototype_patient_ids,
                                                        train_groups, val_reps, metric);
    export_distributions_csv(dist, dir + "/distributions.csv");

    std::vector<PatientReps> bank_groups;
    for (std::size_t p = 0; p < bank.rows; ++p)
        bank_groups.push_back({model.prototype_patient_ids[p], bank.take_rows({p})});
    DistanceMatrix dm = patient_distance_matrix(bank_groups, val_groups, metric);
    export_distance_matrix_csv(dm, dir + "/matrix.csv");

    const auto labels = patient_labels(ds);
    const std::vector<double> thresholds =
        a.thresholds.empty() ? default_thresholds(dm) : parse_doubles(a.thresholds, "thresholds");
    const auto curve = precision_curve(dm, labels, labels, thresholds);
    export_precision_curve_csv(curve, dir + "/precision_curve.csv");

    const PatientPair most = most_similar_pair(dm);
    const PatientPair least = least_similar_pair(dm);
    CsvWriter pairs(dir + "/pairs.csv");
    pairs.line("kind,row_patient,col_patient,distance");
    pairs.line("most," + std::to_string(most.row_patient) + "," + std::to_string(most.col_patient) +
               "," + format_double(most.distance));
    pairs.line("least," + std::to_string(least.row_patient) + "," + std::to_string(least.col_patient) +
               "," + format_double(least.distance));
    pairs.close();

    CsvWriter frames(dir + "/matched_frames.csv");
    std::string header = "kind,side,patient_id,lead_id,label";
    for (std::size_t i = 0; i < kFrameLen; ++i) header += ",s" + std::to_string(i);
    frames.line(header);
    auto emit_patient = [&](const char* kind, const char* side, std::uint32_t id,
                            const EcgDataset& source) {
        for (const EcgFrame& f : source.frames) {
            if (f.patient_id != id) continue;
            std::string row = std::string(kind) + "," + side + "," + std::to_string(f.patient_id) +
                              "," + std::to_string(f.lead_id) + "," + std::to_string(f.label);
            for (float s : f.samples) {
                row += ',';
                row += format_float(s);
            }
            frames.line(row);
        }
    };
    emit_patient("most", "row", most.row_patient, train);
    emit_patient("most", "col", most.col_patient, val);
    emit_patient("least", "row", least.row_patient, train);
    emit_patient("least", "col", least.col_patient, val);
    frames.close();

    auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    std::printf("distances (%s): same %.4f, different %.4f, validation %.4f\n", metric_name(metric),
                mean_of(dist.pcp_to_same), mean_of(dist.pcp_to_different),
                mean_of(dist.pcp_to_validation));
    std::printf("most similar (%u, %u) at %.6f; least similar (%u, %u) at %.6f\n", most.row_patient,
                most.col_patient, most.distance, least.row_patient, least.col_patient, least.distance);
    return 0;
}

struct DistillArgs {
    std::string data;
    std::string ckpt;
    std::uint64_t seed = 0;  // split seed (match the training run)
    std::string seeds = "1,2,3,4,5";
    std::string fractions = "0.05,0.1,0.25,0.5,0.75,1.0";
    std::string out;
    bool parallel = false;
    bool stable_timing = false;
};

int cmd_distill(const DistillArgs& a) {
    EcgDataset ds = load_dataset(a.data);
    PcpModel model = load_model(a.ckpt);
    auto splits = patient_split(ds, SplitRatios{}, a.seed);
    DistillContext ctx = make_distill_context(model, splits[0], splits[1]);

    const std::vector<std::uint64_t> seeds = parse_seeds(a.seeds);
    const std::vector<double> fractions = parse_doubles(a.fractions, "fractions");

    struct Cell {
        CoresetMethod method;
        FeatureSpace space;
        double fraction;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (std::uint64_t s : seeds) {
        cells.push_back({CoresetMethod::uniform, FeatureSpace::raw, 1.0, s});
        cells.push_back({CoresetMethod::lightweight, FeatureSpace::raw, 1.0, s});
        cells.push_back({CoresetMethod::uniform, FeatureSpace::representation, 1.0, s});
        cells.push_back({CoresetMethod::lightweight, FeatureSpace::representation, 1.0, s});
        for (double f : fractions) cells.push_back({CoresetMethod::pcps, FeatureSpace::pcps, f, s});
        cells.push_back({CoresetMethod::full, FeatureSpace::representation, 1.0, s});
    }

    std::vector<DistillResult> results(cells.size());
    if (a.parallel) {
        std::vector<std::future<DistillResult>> futures;
        futures.reserve(cells.size());
        for (const Cell& c : cells)
            futures.push_back(std::async(std::launch::async, [&ctx, c] {
                return distill_eval(ctx, c.method, c.space, c.fraction, c.seed);
            }));
        for (std::size_t i = 0; i < futures.size(); ++i) results[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < cells.size(); ++i)
            results[i] = distill_eval(ctx, cells[i].method, cells[i].space, cells[i].fraction,
                                      cells[i].seed);
    }

    CsvWriter csv(out_path(a.out, "distill.csv"));
    csv.line("method,space,fraction,k,seed,auc,runtime_seconds");
    for (const DistillResult& r : results)
        csv.line(r.method + "," + r.space + "," + format_double(r.fraction) + "," +
                 std::to_string(r.k) + "," + std::to_string(r.seed) + "," + format_double(r.auc) +
                 "," + (a.stable_timing ? std::string("0") : format_double(r.runtime_seconds)));
    csv.close();

    for (const DistillResult& r : results)
        if (r.seed == seeds.front())
            std::printf("%-12s %-14s f=%.2f k=%-5zu auc %.4f\n", r.method.c_str(), r.space.c_str(),
                        r.fraction, r.k, r.auc);
    return 0;
}

struct ExportArgs {
    std::string data;
    std::string ckpt;
    std::string out;
};

int cmd_export_embeddings(const ExportArgs& a) {
    EcgDataset ds = load_dataset(a.data);
    PcpModel model = load_model(a.ckpt);
    Matrix reps = encode_dataset(model, frames_matrix(ds));
    const auto labels = patient_labels(ds);

    CsvWriter csv(out_path(a.out, "embeddings.csv"));
    std::string header = "kind,patient_id,label";
    for (std::size_t e = 0; e < model.embed_dim; ++e) header += ",e" + std::to_string(e);
    csv.line(header);
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        std::string row = "representation," + std::to_string(ds.frames[i].patient_id) + "," +
                          std::to_string(ds.frames[i].label);
        for (std::size_t e = 0; e < model.embed_dim; ++e) {
            row += ',';
            row += format_double(reps.at(i, e));
        }
        csv.line(row);
    }
    const Matrix bank = model.prototype_matrix();
    for (std::size_t p = 0; p < bank.rows; ++p) {
        const std::uint32_t id = model.prototype_patient_ids[p];
        const auto it = labels.find(id);
        if (it == labels.end())
            throw UsageError("export: prototype patient " + std::to_string(id) +
                             " not present in the dataset");
        std::string row = "pcp," + std::to_string(id) + "," + std::to_string(it->second);
        for (std::size_t e = 0; e < model.embed_dim; ++e) {
            row += ',';
            row += format_double(bank.at(p, e));
        }
        csv.line(row);
    }
    csv.close();
    std::printf("wrote %zu representation rows and %zu pcp rows\n", ds.frames.size(), bank.rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"patient cardiac prototypes: training, similarity and distillation workbench"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* cgen = app.add_subcommand("gen", "generate a synthetic ECG cohort");
    cgen->set_config("--config");
    cgen->add_option("--patients", gen.patients, "number of patients");
    cgen->add_option("--frames", gen.frames, "frames per patient per lead");
    cgen->add_option("--classes", gen.classes, "number of arrhythmia classes");
    cgen->add_option("--leads", gen.leads, "comma-separated lead ids (0..11)");
    cgen->add_option("--noise", gen.noise, "additive noise level");
    cgen->add_option("--seed", gen.seed, "generation seed");
    cgen->add_option("-o,--out", gen.out, "output dataset path (.pcpd)");
    cgen->add_option("--csv", gen.csv, "also export the cohort as CSV");

    TrainArgs train;
    CLI::App* ctrain = app.add_subcommand("train", "train a model on the 60/20/20 train split");
    ctrain->set_config("--config");
    ctrain->add_option("--data", train.data, "dataset path")->required();
    ctrain->add_option("--emb", train.emb, "embedding dimension E");
    ctrain->add_option("--batch", train.batch, "batch size");
    ctrain->add_option("--lr", train.lr, "learning rate");
    ctrain->add_option("--tau", train.tau, "contrastive temperature");
    ctrain->add_option("--epochs", train.epochs, "training epochs");
    ctrain->add_option("--seed", train.seed, "split/init/order seed");
    ctrain->add_option("--reduction", train.reduction, "loss reduction: sum or mean");
    ctrain->add_option("-o,--out", train.out, "checkpoint path (.pcpm)");
    ctrain->add_option("--metrics", train.metrics, "per-epoch metrics CSV path");
    ctrain->add_option("--manifest", train.manifest, "patient split manifest CSV path");

    EvalArgs eval;
    CLI::App* ceval = app.add_subcommand("eval", "test-split AUC per hypernetwork input strategy");
    ceval->set_config("--config");
    ceval->add_option("--data", eval.data, "dataset path")->required();
    ceval->add_option("--ckpt", eval.ckpt, "checkpoint path")->required();
    ceval->add_option("--tau", eval.tau, "temperature for similarity weighting");
    ceval->add_option("--seed", eval.seed, "split seed (must match the training run)");
    ceval->add_option("--emb", eval.emb, "expected E (validated against the checkpoint)");
    ceval->add_option("--strategies", eval.strategies, "comma-separated strategy list");
    ceval->add_option("-o,--out", eval.out, "output CSV path");

    SimilarityArgs sim;
    CLI::App* csim = app.add_subcommand("similarity", "distance distributions, matrices, precision");
    csim->set_config("--config");
    csim->add_option("--data", sim.data, "dataset path");
    csim->add_option("--ckpt", sim.ckpt, "checkpoint path")->required();
    csim->add_option("--ckpt-b", sim.ckpt_b, "second checkpoint: cross-dataset bank comparison");
    csim->add_option("--metric", sim.metric, "euclidean or cosine");
    csim->add_option("--seed", sim.seed, "split seed (must match the training run)");
    csim->add_option("--thresholds", sim.thresholds, "comma-separated precision thresholds");
    csim->add_option("--out-dir", sim.out_dir, "directory for the emitted CSVs");

    DistillArgs distill;
    CLI::App* cdistill = app.add_subcommand("distill", "coreset / prototype distillation benchmark");
    cdistill->set_config("--config");
    cdistill->add_option("--data", distill.data, "dataset path")->required();
    cdistill->add_option("--ckpt", distill.ckpt, "checkpoint path")->required();
    cdistill->add_option("--seed", distill.seed, "split seed (must match the training run)");
    cdistill->add_option("--seeds", distill.seeds, "comma-separated cell seeds");
    cdistill->add_option("--fractions", distill.fractions, "PCP fractions to sweep");
    cdistill->add_option("-o,--out", distill.out, "results CSV path");
    cdistill->add_flag("--parallel", distill.parallel, "evaluate grid cells in parallel");
    cdistill->add_flag("--stable-timing", distill.stable_timing,
                       "write 0 for runtime_seconds (byte-stable output)");

    ExportArgs exp;
    CLI::App* cexp = app.add_subcommand("export-embeddings", "frame representations and PCPs as CSV");
    cexp->set_config("--config");
    cexp->add_option("--data", exp.data, "dataset path")->required();
    cexp->add_option("--ckpt", exp.ckpt, "checkpoint path")->required();
    cexp->add_option("-o,--out", exp.out, "output CSV path");

    try {
        app.parse(argc, argv);
        if (cgen->parsed()) return cmd_gen(gen);
        if (ctrain->parsed()) return cmd_train(train);
        if (ceval->parsed()) return cmd_eval(eval);
        if (csim->parsed()) return cmd_similarity(sim);
        if (cdistill->parsed()) return cmd_distill(distill);
        if (cexp->parsed()) return cmd_export_embeddings(exp);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const pcp::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const pcp::ParseError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const pcp::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const pcp::UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
