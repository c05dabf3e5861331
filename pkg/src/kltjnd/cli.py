"""Multi-command front end for batch and scripted use.

Primary results go to standard output in machine-readable form (plain
decimals or CSV rows); diagnostics go to standard error. Exit codes:
0 success, 1 I/O failure, 2 domain error, 3 codec failure.
"""

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import applications, calibration, image_io, jnd, klt, spectral, vdp
from .critical import DEFAULT_BETA, DEFAULT_ETA, WeibullParams, reconstruct_cpl
from .errors import CodecError, ImageFormatError, KltJndError

EXIT_OK = 0
EXIT_IO = 1
EXIT_DOMAIN = 2
EXIT_CODEC = 3

IMAGE_GLOBS = ("*.png", "*.pgm", "*.ppm")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ImageFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CodecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CODEC
    except (KltJndError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def _exit_code_for(exc):
    if isinstance(exc, (FileNotFoundError, ImageFormatError, OSError)):
        return EXIT_IO
    if isinstance(exc, CodecError):
        return EXIT_CODEC
    return EXIT_DOMAIN


def _prior_from(args):
    beta, eta = DEFAULT_BETA, DEFAULT_ETA
    if getattr(args, "config", None):
        with open(args.config) as f:
            cfg = json.load(f)
        beta = float(cfg.get("beta", beta))
        eta = float(cfg.get("eta", eta))
    if getattr(args, "beta", None) is not None:
        beta = args.beta
    if getattr(args, "eta", None) is not None:
        eta = args.eta
    return WeibullParams(beta=beta, eta=eta)


def _load_or_estimate_map(args, img, params):
    if getattr(args, "jnd", None):
        m = image_io.load_map(args.jnd)
        if m.shape != img.shape:
            raise ValueError(f"JND map {m.shape} does not match image {img.shape}")
        return m
    m, _ = jnd.estimate_jnd(img, params=params, blockside=args.block)
    return m


def _dump_kernel(img, block, prefix):
    padded, _ = image_io.pad_to_block_multiple(img, block)
    kernel = klt.eigendecompose_sym(klt.covariance(klt.extract_patches(padded, block)))
    image_io.write_pfm(f"{prefix}.basis.pfm", kernel.basis)
    with open(f"{prefix}.eigenvalues.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["k", "eigenvalue"])
        for i, value in enumerate(kernel.eigenvalues, start=1):
            writer.writerow([i, f"{value:.12g}"])


# ---------------------------------------------------------------- commands


def cmd_jnd(args):
    src = Path(args.input)
    params = _prior_from(args)
    if src.is_dir():
        return _jnd_batch(src, args, params)
    img = image_io.load_image(src)
    if args.dump_kernel:
        _dump_kernel(img, args.block, args.dump_kernel)
    m, point = jnd.estimate_jnd(img, params=params, blockside=args.block)
    out = Path(args.out) if args.out else src.with_name(src.stem + ".jnd.pfm")
    image_io.write_pfm(out, m)
    if args.png:
        image_io.save_image(jnd.normalize_map(m) * 255.0, args.png)
    print(f"L={point.components} P_L={point.cumulative_energy:.6f}")
    return EXIT_OK


def _jnd_worker(task):
    path, out_path, beta, eta, block = task
    try:
        img = image_io.load_image(path)
        m, point = jnd.estimate_jnd(img, params=WeibullParams(beta, eta), blockside=block)
        image_io.write_pfm(out_path, m)
        return path, None, (point.components, point.cumulative_energy)
    except Exception as exc:  # reported per image, batch continues
        return path, _exit_code_for(exc), str(exc)


def _jnd_batch(src_dir, args, params):
    files = sorted({p for pattern in IMAGE_GLOBS for p in src_dir.glob(pattern)})
    if not files:
        print(f"error: no images found in {src_dir}", file=sys.stderr)
        return EXIT_IO
    out_dir = Path(args.out) if args.out else src_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [
        (str(p), str(out_dir / (p.stem + ".jnd.pfm")), params.beta, params.eta, args.block)
        for p in files
    ]
    worst = EXIT_OK
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_jnd_worker, tasks))
    else:
        outcomes = [_jnd_worker(t) for t in tasks]
    for path, failure, payload in outcomes:
        if failure is None:
            components, cumulative = payload
            print(f"{path},{components},{cumulative:.6f}")
        else:
            print(f"error: {path}: {payload}", file=sys.stderr)
            worst = max(worst, failure)
    return worst


def cmd_cpl(args):
    src = Path(args.input)
    img = image_io.load_image(src)
    if args.dump_kernel:
        _dump_kernel(img, args.block, args.dump_kernel)
    cpl, point = reconstruct_cpl(img, params=_prior_from(args), blockside=args.block)
    out = Path(args.out) if args.out else src.with_name(src.stem + ".cpl.png")
    image_io.save_image(cpl, out)
    print(f"L={point.components} P_L={point.cumulative_energy:.6f}")
    return EXIT_OK


def cmd_info(args):
    img = image_io.load_image(args.input)
    padded, _ = image_io.pad_to_block_multiple(img, args.block)
    patches = klt.extract_patches(padded, args.block)
    kernel = klt.eigendecompose_sym(klt.covariance(patches))
    profile = spectral.energy_profile(klt.forward_klt(kernel.basis, patches))
    writer = csv.writer(sys.stdout)
    writer.writerow(["k", "energy", "normalized", "cumulative"])
    for i in range(profile.energy.size):
        writer.writerow(
            [
                i + 1,
                f"{profile.energy[i]:.10g}",
                f"{profile.normalized[i]:.10g}",
                f"{profile.cumulative[i]:.10g}",
            ]
        )
    return EXIT_OK


def cmd_inject(args):
    src = Path(args.input)
    img = image_io.load_image(src)
    m = _load_or_estimate_map(args, img, _prior_from(args))
    if args.target_psnr is not None:
        theta = applications.calibrate_theta(img, m, args.target_psnr, seed=args.seed)
    elif args.theta is not None:
        theta = args.theta
    else:
        raise ValueError("one of --theta / --target-psnr is required")
    cfg = applications.NoiseConfig(theta=theta, seed=args.seed, target_psnr=args.target_psnr)
    noisy = applications.inject_noise(img, m, cfg)
    out = Path(args.out) if args.out else src.with_name(src.stem + ".noisy.png")
    image_io.save_image(noisy, out)
    achieved = image_io.psnr(img, noisy) if theta > 0 and np.any(m > 0) else float("inf")
    print(f"theta={theta:.8g} psnr={achieved:.4f}")
    return EXIT_OK


def cmd_smooth(args):
    src = Path(args.input)
    img = image_io.load_image(src)
    m = _load_or_estimate_map(args, img, _prior_from(args))
    out = Path(args.out) if args.out else src.with_name(src.stem + ".smooth.png")
    image_io.save_image(applications.jnd_smooth(img, m, blockside=args.block), out)
    return EXIT_OK


def cmd_compress(args):
    src = Path(args.input)
    img = image_io.load_image(src)
    m = _load_or_estimate_map(args, img, _prior_from(args))
    smoothed = applications.jnd_smooth(img, m, blockside=args.block)
    if args.codec_cmd:
        codec = applications.CommandCodec(encode_cmd=args.codec_cmd, decode_cmd=args.decode_cmd)
    else:
        codec = applications.PillowJpegCodec()
    bpp_ori, dec_ori = applications.run_codec(img, args.quality, codec)
    bpp_jnd, dec_jnd = applications.run_codec(smoothed, args.quality, codec)
    psnr_ori = image_io.psnr(img, dec_ori)
    psnr_jnd = image_io.psnr(img, dec_jnd)
    gain = applications.compression_gain(bpp_ori, bpp_jnd, psnr_ori, psnr_jnd)
    writer = csv.writer(sys.stdout)
    writer.writerow(
        [
            src.name,
            args.quality,
            f"{bpp_ori:.6f}",
            f"{bpp_jnd:.6f}",
            f"{psnr_ori:.4f}",
            f"{psnr_jnd:.4f}",
            f"{gain.delta_bitrate:.4f}",
            f"{gain.delta_psnr:.4f}",
            "" if gain.gain is None else f"{gain.gain:.4f}",
        ]
    )
    return EXIT_OK


def cmd_vdp(args):
    ref = image_io.load_image(args.ref)
    dist = image_io.load_image(args.dist)
    if args.jnd:
        m = image_io.load_map(args.jnd)
    else:
        m, _ = jnd.estimate_jnd(ref, params=_prior_from(args), blockside=args.block)
    prob = vdp.jnd_to_vdp(ref, dist, m, vdp.PsychometricParams(beta_slope=args.slope))
    out = Path(args.out) if args.out else Path(args.dist).with_name(Path(args.dist).stem + ".vdp.pfm")
    image_io.write_pfm(out, prob)
    if args.png:
        image_io.save_image(prob * 255.0, args.png)
    if args.marking:
        marking = image_io.load_map(args.marking)
        print(f"{vdp.vdp_rmse(prob, marking):.6f}")
    return EXIT_OK


def cmd_eval(args):
    a = jnd.normalize_map(image_io.load_map(args.predicted))
    b = jnd.normalize_map(image_io.load_map(args.reference))
    print(f"{jnd.map_rmse(a, b):.6f}")
    return EXIT_OK


def _resolve_image(images_dir, image_id):
    base = Path(images_dir)
    for candidate in (base / image_id, *(base / f"{image_id}{ext}" for ext in (".png", ".pgm", ".ppm"))):
        if candidate.is_file():
            return candidate
    raise FileNotFoundError(f"no image file for id {image_id!r} under {images_dir}")


def cmd_calibrate(args):
    records = calibration.read_votes_csv(args.votes)
    results = [calibration.aggregate_votes(r) for r in records]
    entries = [(_resolve_image(args.images, r.image_id), r.critical) for r in results]
    energies = calibration.collect_energy_thresholds(entries, blockside=args.block)
    for result, energy in zip(results, energies):
        result.cumulative_energy = energy
    params = calibration.fit_weibull(energies)
    payload = json.dumps({"beta": params.beta, "eta": params.eta})
    print(payload)
    if args.out:
        Path(args.out).write_text(payload + "\n")
    if args.table:
        with open(args.table, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(
                ["image_id", "n_votes", "mu", "sigma", "lower", "upper", "mu_filtered", "kept", "L", "P_L"]
            )
            for r in results:
                writer.writerow(
                    [
                        r.image_id,
                        r.total,
                        f"{r.mu:.4f}",
                        f"{r.sigma:.4f}",
                        f"{r.lower:.4f}",
                        f"{r.upper:.4f}",
                        f"{r.mu_filtered:.4f}",
                        r.kept,
                        r.critical,
                        f"{r.cumulative_energy:.8f}",
                    ]
                )
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_prior_flags(p):
    p.add_argument("--beta", type=float, default=None, help="prior shape override")
    p.add_argument("--eta", type=float, default=None, help="prior scale override")
    p.add_argument("--config", default=None, help="JSON file with beta/eta keys")


def _add_block_flag(p):
    p.add_argument("--block", type=int, default=klt.DEFAULT_BLOCKSIDE, help="patch side (default 8)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kltjnd",
        description="Per-pixel JND maps from patch-KLT spectra, plus noise, smoothing and visibility tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("jnd", help="estimate a JND map (file or directory batch)")
    p.add_argument("input")
    p.add_argument("--out", help="output PFM path (or directory in batch mode)")
    p.add_argument("--png", help="also write a normalized 8-bit visualization")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers in batch mode")
    p.add_argument("--dump-kernel", help="debug: write <prefix>.basis.pfm and eigenvalues CSV")
    _add_block_flag(p)
    _add_prior_flags(p)
    p.set_defaults(func=cmd_jnd)

    p = sub.add_parser("cpl", help="write the critical perceptual lossless reconstruction")
    p.add_argument("input")
    p.add_argument("--out", help="output image path (.png/.pgm/.pfm)")
    p.add_argument("--dump-kernel", help="debug: write <prefix>.basis.pfm and eigenvalues CSV")
    _add_block_flag(p)
    _add_prior_flags(p)
    p.set_defaults(func=cmd_cpl)

    p = sub.add_parser("info", help="print per-component energy profile as CSV")
    p.add_argument("input")
    _add_block_flag(p)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("inject", help="JND-guided bipolar noise injection")
    p.add_argument("input")
    p.add_argument("--jnd", help="JND map (PFM); estimated from the input when omitted")
    p.add_argument("--out")
    p.add_argument("--theta", type=float, default=None, help="noise amplitude factor")
    p.add_argument("--target-psnr", type=float, default=None, help="calibrate theta to this PSNR")
    p.add_argument("--seed", type=int, default=0)
    _add_block_flag(p)
    _add_prior_flags(p)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("smooth", help="JND-guided smoothing toward block means")
    p.add_argument("input")
    p.add_argument("--jnd", help="JND map (PFM); estimated from the input when omitted")
    p.add_argument("--out")
    _add_block_flag(p)
    _add_prior_flags(p)
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("compress", help="codec pass with and without JND smoothing; CSV row out")
    p.add_argument("input")
    p.add_argument("--jnd", help="JND map (PFM); estimated from the input when omitted")
    p.add_argument("--quality", type=int, default=50)
    p.add_argument("--codec-cmd", help="encoder template with {in} {out} {quality}")
    p.add_argument("--decode-cmd", help="decoder template with {in} {out}")
    _add_block_flag(p)
    _add_prior_flags(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("vdp", help="distortion-detection probability map from a JND map")
    p.add_argument("--ref", required=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--jnd", help="JND map (PFM); estimated from --ref when omitted")
    p.add_argument("--marking", help="subjective marking map; prints RMSE when given")
    p.add_argument("--out", help="output probability PFM")
    p.add_argument("--png", help="also write an 8-bit heatmap")
    p.add_argument("--slope", type=float, default=3.5, help="psychometric slope")
    _add_block_flag(p)
    _add_prior_flags(p)
    p.set_defaults(func=cmd_vdp)

    p = sub.add_parser("eval", help="RMSE between two normalized maps")
    p.add_argument("predicted")
    p.add_argument("reference")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("calibrate", help="fit the cumulative-energy prior from vote data")
    p.add_argument("votes", help="CSV votes (wide or long form)")
    p.add_argument("--images", required=True, help="directory with the voted images")
    p.add_argument("--out", help="write fitted {beta, eta} JSON here as well")
    p.add_argument("--table", help="write the per-image aggregation table CSV here")
    _add_block_flag(p)
    p.set_defaults(func=cmd_calibrate)

    return parser


if __name__ == "__main__":
    sys.exit(main())
