// gpile command line: phantom | fit | render | voxelize | compress |
// decompress | eval. Exit codes: 0 success, 1 usage error, 2 data/numeric
// error. All randomness sits behind --seed; the resolved configuration is
// printed and echoed into the output directory.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpile/gpile.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void echo_config(const json& cfg, const std::string& command, const fs::path& out_path) {
    std::cout << cfg.dump(2) << "\n";
    fs::path dir = out_path.has_extension() ? out_path.parent_path() : out_path;
    if (dir.empty()) dir = ".";
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream echo(dir / (command + "_config.json"));
    echo << cfg.dump(2) << "\n";
}

gpile::FitConfig fit_config_from_json(const json& j) {
    gpile::FitConfig cfg;
    const std::vector<std::string> known = {
        "iterations",      "lr_position",     "lr_opacity",       "lr_scale",
        "lr_rotation",     "init_count",      "tau",              "densify_start",
        "densify_end",     "grad_threshold",  "lambda",           "densify_interval",
        "rng_seed",        "init_mode",       "scale_modifier",   "split_scale_fraction",
        "split_scale_divisor", "dssim_scale", "progress_interval", "tile_size",
        "footprint_sigmas"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw std::invalid_argument("fit config: unknown key '" + it.key() + "'");
    cfg.iterations = j.value("iterations", cfg.iterations);
    cfg.lr_position = j.value("lr_position", cfg.lr_position);
    cfg.lr_opacity = j.value("lr_opacity", cfg.lr_opacity);
    cfg.lr_scale = j.value("lr_scale", cfg.lr_scale);
    cfg.lr_rotation = j.value("lr_rotation", cfg.lr_rotation);
    cfg.init_count = j.value("init_count", cfg.init_count);
    cfg.tau = j.value("tau", cfg.tau);
    cfg.densify_start = j.value("densify_start", cfg.densify_start);
    cfg.densify_end = j.value("densify_end", cfg.densify_end);
    cfg.grad_threshold = j.value("grad_threshold", cfg.grad_threshold);
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.densify_interval = j.value("densify_interval", cfg.densify_interval);
    cfg.rng_seed = j.value("rng_seed", cfg.rng_seed);
    cfg.init_mode = j.value("init_mode", cfg.init_mode);
    cfg.scale_modifier = j.value("scale_modifier", cfg.scale_modifier);
    cfg.split_scale_fraction = j.value("split_scale_fraction", cfg.split_scale_fraction);
    cfg.split_scale_divisor = j.value("split_scale_divisor", cfg.split_scale_divisor);
    cfg.dssim_scale = j.value("dssim_scale", cfg.dssim_scale);
    cfg.progress_interval = j.value("progress_interval", cfg.progress_interval);
    cfg.tile_size = j.value("tile_size", cfg.tile_size);
    cfg.footprint_sigmas = j.value("footprint_sigmas", cfg.footprint_sigmas);
    return cfg;
}

json fit_config_to_json(const gpile::FitConfig& cfg) {
    return json{{"iterations", cfg.iterations},
                {"lr_position", cfg.lr_position},
                {"lr_opacity", cfg.lr_opacity},
                {"lr_scale", cfg.lr_scale},
                {"lr_rotation", cfg.lr_rotation},
                {"init_count", cfg.init_count},
                {"tau", cfg.tau},
                {"densify_start", cfg.densify_start},
                {"densify_end", cfg.densify_end},
                {"grad_threshold", cfg.grad_threshold},
                {"lambda", cfg.lambda},
                {"densify_interval", cfg.densify_interval},
                {"rng_seed", cfg.rng_seed},
                {"init_mode", cfg.init_mode},
                {"scale_modifier", cfg.scale_modifier},
                {"split_scale_fraction", cfg.split_scale_fraction},
                {"split_scale_divisor", cfg.split_scale_divisor},
                {"dssim_scale", cfg.dssim_scale},
                {"progress_interval", cfg.progress_interval},
                {"tile_size", cfg.tile_size},
                {"footprint_sigmas", cfg.footprint_sigmas}};
}

std::string volume_file(const std::string& dir_or_file) {
    fs::path p(dir_or_file);
    if (fs::is_directory(p)) return (p / "volume.raw").string();
    return p.string();
}

int cmd_phantom(const std::string& spec_path, const std::string& out_dir,
                std::uint64_t seed, bool seed_set) {
    std::ifstream in(spec_path);
    if (!in) throw gpile::LoadError("phantom: cannot open spec " + spec_path);
    json jspec;
    in >> jspec;
    gpile::PhantomSpec spec = gpile::phantom_spec_from_json(jspec);
    if (seed_set) spec.rng_seed = seed;

    echo_config(gpile::phantom_spec_to_json(spec), "phantom", fs::path(out_dir));
    const gpile::Phantom phantom = gpile::make_phantom(spec);
    fs::create_directories(out_dir);
    gpile::save_volume(phantom.volume, (fs::path(out_dir) / "volume.raw").string());
    gpile::save_checkpoint(phantom.oracle, (fs::path(out_dir) / "oracle.gpile").string());
    std::cout << "phantom: wrote " << phantom.volume.voxel_count() << " voxels, "
              << phantom.oracle.size() << " oracle primitives to " << out_dir << "\n";
    return 0;
}

int cmd_fit(const std::string& volume_path, const std::string& config_path,
            const std::string& out_path, const std::string& sigma_z_arg,
            std::uint64_t seed, bool seed_set, const json& flag_overrides) {
    gpile::FitConfig cfg;
    json jcfg = fit_config_to_json(cfg);
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw gpile::LoadError("fit: cannot open config " + config_path);
        json file_cfg;
        in >> file_cfg;
        jcfg.update(file_cfg);
    }
    jcfg.update(flag_overrides);  // flags > file > defaults
    cfg = fit_config_from_json(jcfg);
    if (seed_set) cfg.rng_seed = seed;

    const gpile::VolumeGrid volume = gpile::load_volume(volume_file(volume_path));
    gpile::PsfSpec psf;
    psf.sigma_x = psf.sigma_y = 0.5 * (volume.spacing.x + volume.spacing.y);
    if (sigma_z_arg.empty() || sigma_z_arg == "auto")
        psf.sigma_z = volume.spacing.z;  // delta_z, the Nyquist-step default
    else
        psf.sigma_z = std::stod(sigma_z_arg);

    json echo = fit_config_to_json(cfg);
    echo["sigma_z"] = psf.sigma_z;
    echo["volume"] = volume_path;
    echo_config(echo, "fit", fs::path(out_path));

    const fs::path log_path = fs::path(out_path).parent_path().empty()
                                  ? fs::path("fit_progress.ndjson")
                                  : fs::path(out_path).parent_path() / "fit_progress.ndjson";
    std::ofstream log(log_path);
    const auto t0 = std::chrono::steady_clock::now();
    const gpile::GaussianSet set =
        gpile::fit(volume, psf, cfg, [&](const gpile::FitProgress& p) {
            json rec{{"iter", p.iteration},
                     {"loss", p.loss},
                     {"count", p.count},
                     {"psnr2d", p.psnr2d}};
            log << rec.dump() << "\n";
            log.flush();
            std::cout << rec.dump() << "\n";
        });
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    gpile::save_checkpoint(set, out_path);
    json summary{{"gaussian_count", set.size()},
                 {"fit_seconds", seconds},
                 {"checkpoint", out_path}};
    std::ofstream sp(fs::path(out_path).parent_path().empty()
                         ? fs::path("fit_summary.json")
                         : fs::path(out_path).parent_path() / "fit_summary.json");
    sp << summary.dump(2) << "\n";
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_render(const std::string& ckpt_path, const std::string& volume_path, int slice,
               const std::string& out_path, const std::string& sigma_z_arg, double tau) {
    const gpile::GaussianSet set = gpile::load_checkpoint(ckpt_path);
    const gpile::VolumeGrid volume = gpile::load_volume(volume_file(volume_path));
    if (slice < 0 || slice >= volume.dims[2])
        throw std::invalid_argument("render: slice out of range");
    gpile::PsfSpec psf;
    psf.sigma_x = psf.sigma_y = 0.5 * (volume.spacing.x + volume.spacing.y);
    psf.sigma_z = (sigma_z_arg.empty() || sigma_z_arg == "auto") ? volume.spacing.z
                                                                 : std::stod(sigma_z_arg);
    gpile::RasterConfig rcfg;
    rcfg.tau = tau;

    json echo{{"ckpt", ckpt_path}, {"slice", slice},   {"sigma_z", psf.sigma_z},
              {"tau", tau},        {"out", out_path}};
    echo_config(echo, "render", fs::path(out_path));

    const gpile::SlicePose pose = gpile::slice_pose_for_index(volume, slice);
    const gpile::SliceImage img = gpile::rasterize_slice(set, pose, psf, rcfg);
    if (fs::path(out_path).extension() == ".pgm")
        gpile::save_pgm16(img, out_path);
    else
        gpile::save_image_raw(img, pose.pixel_spacing, out_path);
    std::cout << "render: slice " << slice << " -> " << out_path << "\n";
    return 0;
}

int cmd_voxelize(const std::string& ckpt_path, const std::string& dims_arg,
                 const std::string& out_dir, double support_sigmas) {
    const gpile::GaussianSet set = gpile::load_checkpoint(ckpt_path);
    gpile::VoxelizerConfig cfg;
    if (std::sscanf(dims_arg.c_str(), "%d,%d,%d", &cfg.dims[0], &cfg.dims[1], &cfg.dims[2]) != 3)
        throw std::invalid_argument("voxelize: --dims must be X,Y,Z");
    cfg.support_sigmas = support_sigmas;
    const gpile::Vec3 ext = set.bbox.extent();
    cfg.spacing = {ext.x / cfg.dims[0], ext.y / cfg.dims[1], ext.z / cfg.dims[2]};
    cfg.origin = set.bbox.min + cfg.spacing * 0.5;

    json echo{{"ckpt", ckpt_path},
              {"dims", {cfg.dims[0], cfg.dims[1], cfg.dims[2]}},
              {"support_sigmas", cfg.support_sigmas},
              {"out", out_dir}};
    echo_config(echo, "voxelize", fs::path(out_dir));

    gpile::VolumeGrid vol = gpile::voxelize(set, cfg);
    for (double& v : vol.data) v = std::clamp(v, 0.0, 1.0);
    fs::create_directories(out_dir);
    gpile::save_volume(vol, (fs::path(out_dir) / "volume.raw").string());
    std::cout << "voxelize: " << set.size() << " primitives -> " << out_dir << "\n";
    return 0;
}

int cmd_compress(const std::string& ckpt_path, const std::string& out_path, int pos_bits,
                 int attr_bits, int level) {
    const gpile::GaussianSet set = gpile::load_checkpoint(ckpt_path);
    gpile::QuantSpec spec;
    spec.pos_bits = pos_bits;
    spec.morton_bits = pos_bits;
    spec.opacity_bits = attr_bits;
    spec.scale_bits = attr_bits;
    spec.quat_bits = attr_bits;

    json echo{{"ckpt", ckpt_path}, {"pos_bits", pos_bits}, {"attr_bits", attr_bits},
              {"level", level},    {"out", out_path}};
    echo_config(echo, "compress", fs::path(out_path));

    const gpile::CompressedContainer c =
        gpile::encode(set, spec, static_cast<std::uint8_t>(level));
    gpile::save_container(c, out_path);
    const auto ckpt_size = gpile::checkpoint_bytes(set.size());
    std::cout << "compress: " << ckpt_size << " -> " << c.total_bytes() << " bytes ("
              << static_cast<double>(ckpt_size) / c.total_bytes() << "x)\n";
    return 0;
}

int cmd_decompress(const std::string& in_path, const std::string& out_path) {
    json echo{{"in", in_path}, {"out", out_path}};
    echo_config(echo, "decompress", fs::path(out_path));
    const gpile::CompressedContainer c = gpile::load_container(in_path);
    const gpile::GaussianSet set = gpile::decode(c);
    gpile::save_checkpoint(set, out_path);
    std::cout << "decompress: " << set.size() << " primitives -> " << out_path << "\n";
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path,
             const std::string& out_path, const std::string& ckpt_path,
             const std::string& container_path, double fit_seconds) {
    const gpile::VolumeGrid pred = gpile::load_volume(volume_file(pred_path));
    const gpile::VolumeGrid gt = gpile::load_volume(volume_file(gt_path));
    for (int d = 0; d < 3; ++d)
        if (pred.dims[d] != gt.dims[d])
            throw std::invalid_argument("eval: volume dims mismatch");

    json echo{{"pred", pred_path}, {"gt", gt_path}, {"out", out_path}};
    echo_config(echo, "eval", fs::path(out_path));

    double ssim2d_sum = 0.0;
    for (int k = 0; k < gt.dims[2]; ++k)
        ssim2d_sum += gpile::ssim(gpile::extract_slice(pred, k), gpile::extract_slice(gt, k));
    const double psnr2d = gpile::psnr2d_mean(pred, gt);
    const double psnr3d = gpile::psnr(pred, gt);
    const double ssim3d = gpile::ssim(pred, gt);

    std::uint64_t gaussian_count = 0, ckpt_bytes = 0, container_bytes = 0;
    double ratio_ckpt = 0.0, ratio_vox = 0.0;
    if (!ckpt_path.empty()) {
        const gpile::GaussianSet set = gpile::load_checkpoint(ckpt_path);
        gaussian_count = set.size();
        ckpt_bytes = gpile::checkpoint_bytes(set.size());
    }
    if (!container_path.empty()) {
        container_bytes = fs::file_size(container_path);
        const auto report =
            gpile::report_ratio(ckpt_bytes, container_bytes, gt.voxel_count());
        ratio_ckpt = report.vs_checkpoint;
        ratio_vox = report.vs_voxels;
    }

    json metrics{{"psnr2d_mean", psnr2d},
                 {"ssim2d_mean", ssim2d_sum / gt.dims[2]},
                 {"psnr3d", psnr3d},
                 {"ssim3d", ssim3d},
                 {"gaussian_count", gaussian_count},
                 {"checkpoint_bytes", ckpt_bytes},
                 {"container_bytes", container_bytes},
                 {"ratio_vs_checkpoint", ratio_ckpt},
                 {"ratio_vs_voxels", ratio_vox},
                 {"fit_seconds", fit_seconds}};
    std::ofstream out(out_path);
    if (!out) throw gpile::LoadError("eval: cannot open " + out_path);
    out << metrics.dump(2) << "\n";
    std::cout << metrics.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Focus-aware Gaussian slice-stack fitting, rendering, compression"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    int threads = 0;
    app.add_option("--threads", threads, "Worker thread cap (0 = hardware)");

    std::uint64_t seed = 0;
    bool seed_set = false;

    // phantom
    auto* sc_phantom = app.add_subcommand("phantom", "Generate a synthetic slice stack");
    std::string phantom_spec, phantom_out;
    sc_phantom->add_option("--spec", phantom_spec, "Phantom spec JSON")->required();
    sc_phantom->add_option("--out", phantom_out, "Output directory")->required();
    sc_phantom->add_option("--seed", seed, "RNG seed")->each([&](const std::string&) {
        seed_set = true;
    });

    // fit
    auto* sc_fit = app.add_subcommand("fit", "Fit a Gaussian set to a volume");
    std::string fit_volume, fit_config, fit_out, fit_sigma_z = "auto";
    long long fit_iterations = -1, fit_init_count = -1;
    sc_fit->add_option("--volume", fit_volume, "Volume directory or .raw file")->required();
    sc_fit->add_option("--config", fit_config, "Fit config JSON");
    sc_fit->add_option("--out", fit_out, "Output checkpoint path")->required();
    sc_fit->add_option("--sigma-z", fit_sigma_z, "Slice thickness (world units) or 'auto'");
    sc_fit->add_option("--iterations", fit_iterations, "Override iteration count");
    sc_fit->add_option("--init-count", fit_init_count, "Override initial primitive count");
    sc_fit->add_option("--seed", seed, "RNG seed")->each([&](const std::string&) {
        seed_set = true;
    });

    // render
    auto* sc_render = app.add_subcommand("render", "Render one slice from a checkpoint");
    std::string render_ckpt, render_volume, render_out, render_sigma_z = "auto";
    int render_slice = 0;
    double render_tau = 0.02;
    sc_render->add_option("--ckpt", render_ckpt, "Checkpoint path")->required();
    sc_render->add_option("--volume", render_volume, "Volume for slice geometry")->required();
    sc_render->add_option("--slice", render_slice, "Slice index")->required();
    sc_render->add_option("--out", render_out, "Output .pgm or .raw path")->required();
    sc_render->add_option("--sigma-z", render_sigma_z, "Slice thickness or 'auto'");
    sc_render->add_option("--tau", render_tau, "Cull threshold");

    // voxelize
    auto* sc_vox = app.add_subcommand("voxelize", "Evaluate the set on a dense grid");
    std::string vox_ckpt, vox_dims, vox_out;
    double vox_support = 3.0;
    sc_vox->add_option("--ckpt", vox_ckpt, "Checkpoint path")->required();
    sc_vox->add_option("--dims", vox_dims, "Output dims X,Y,Z")->required();
    sc_vox->add_option("--out", vox_out, "Output directory")->required();
    sc_vox->add_option("--support-sigmas", vox_support, "Support radius in sigmas");

    // compress
    auto* sc_comp = app.add_subcommand("compress", "Compress a checkpoint");
    std::string comp_ckpt, comp_out;
    int comp_pos_bits = 14, comp_attr_bits = 12, comp_level = 6;
    sc_comp->add_option("--ckpt", comp_ckpt, "Checkpoint path")->required();
    sc_comp->add_option("--out", comp_out, "Output container path")->required();
    sc_comp->add_option("--pos-bits", comp_pos_bits, "Position bits per axis");
    sc_comp->add_option("--attr-bits", comp_attr_bits, "Attribute bits");
    sc_comp->add_option("--level", comp_level, "LZMA preset level");

    // decompress
    auto* sc_dec = app.add_subcommand("decompress", "Decode a container to a checkpoint");
    std::string dec_in, dec_out;
    sc_dec->add_option("--in", dec_in, "Container path")->required();
    sc_dec->add_option("--out", dec_out, "Output checkpoint path")->required();

    // eval
    auto* sc_eval = app.add_subcommand("eval", "Volume metrics and compression ratios");
    std::string eval_pred, eval_gt, eval_out, eval_ckpt, eval_container;
    double eval_fit_seconds = 0.0;
    sc_eval->add_option("--pred", eval_pred, "Predicted volume")->required();
    sc_eval->add_option("--gt", eval_gt, "Ground-truth volume")->required();
    sc_eval->add_option("--out", eval_out, "metrics.json path")->required();
    sc_eval->add_option("--ckpt", eval_ckpt, "Checkpoint for count/size fields");
    sc_eval->add_option("--container", eval_container, "Container for ratio fields");
    sc_eval->add_option("--fit-seconds", eval_fit_seconds, "Fit wall time passthrough");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    gpile::worker_cap() = threads;
    try {
        if (*sc_phantom) return cmd_phantom(phantom_spec, phantom_out, seed, seed_set);
        if (*sc_fit) {
            json overrides = json::object();
            if (fit_iterations >= 0) overrides["iterations"] = fit_iterations;
            if (fit_init_count >= 0) overrides["init_count"] = fit_init_count;
            return cmd_fit(fit_volume, fit_config, fit_out, fit_sigma_z, seed, seed_set,
                           overrides);
        }
        if (*sc_render)
            return cmd_render(render_ckpt, render_volume, render_slice, render_out,
                              render_sigma_z, render_tau);
        if (*sc_vox) return cmd_voxelize(vox_ckpt, vox_dims, vox_out, vox_support);
        if (*sc_comp)
            return cmd_compress(comp_ckpt, comp_out, comp_pos_bits, comp_attr_bits,
                                comp_level);
        if (*sc_dec) return cmd_decompress(dec_in, dec_out);
        if (*sc_eval)
            return cmd_eval(eval_pred, eval_gt, eval_out, eval_ckpt, eval_container,
                            eval_fit_seconds);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
