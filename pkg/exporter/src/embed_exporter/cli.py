"""``embed-export`` command line entry point.

Two shapes of invocation:

    embed-export --input corpus.csv --format csv --model-id distilbert-base-uncased \
        --max-length 512 --batch-size 16 --out emb.embx
    embed-export verify emb.embx

Exit codes: 0 success, 1 file system errors, 2 bad corpus or arguments,
3 model-load failure, 4 checksum mismatch during verify.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .corpus import CorpusError
from .embx import EmbxCrcError, inspect_embx
from .export import ExportJob, ModelLoadError, SUPPORTED_MODELS, run_export

log = logging.getLogger("embed_exporter")


def build_export_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="embed-export",
        description="Embed a corpus with a pretrained encoder and write an "
                    "EMBX file; 'embed-export verify FILE' checks one.")
    p.add_argument("--input", required=True, help="corpus file (id,text,label)")
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p.add_argument("--model-id", required=True, choices=SUPPORTED_MODELS)
    p.add_argument("--max-length", type=int, default=512,
                   help="token truncation/padding length (default 512)")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--out", required=True, help="EMBX output path")
    return p


def build_verify_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="embed-export verify",
                                description="Check an EMBX file's structure "
                                            "and checksum.")
    p.add_argument("path", help="EMBX file to verify")
    return p


def cmd_export(argv) -> int:
    args = build_export_parser().parse_args(argv)
    job = ExportJob(input=args.input, format=args.format,
                    model_id=args.model_id, max_length=args.max_length,
                    batch_size=args.batch_size, out=args.out)
    run_export(job)
    return 0


def cmd_verify(argv) -> int:
    args = build_verify_parser().parse_args(argv)
    info = inspect_embx(args.path)
    print(f"model_id {info.model_id}")
    print(f"dim {info.dim}")
    print(f"count {info.count}")
    print(f"crc32 {info.crc32:#010x}")
    return 0


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        if argv and argv[0] == "verify":
            return cmd_verify(argv[1:])
        return cmd_export(list(argv))
    except EmbxCrcError as exc:
        log.error("%s", exc)
        return 4
    except ModelLoadError as exc:
        log.error("%s", exc)
        return 3
    except (CorpusError, ValueError) as exc:
        log.error("%s", exc)
        return 2
    except OSError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
