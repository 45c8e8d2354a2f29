import argparse
import os


def check_positive_integer(number: str) -> int:
    """
    Positive integer validator for Argparse

    :param number:
    :return: Positive integer
    """
    try:
        number = int(number)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{number} is not an integer")
    if number <= 0:
        raise argparse.ArgumentTypeError(f"{number} is not valid. Must be > 0")
    return number


def check_non_negative_integer(number: str) -> int:
    """
    Non negative integer validator for Argparse, seeds and ticks

    :param number:
    :return: Integer >= 0
    """
    try:
        number = int(number)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{number} is not an integer")
    if number < 0:
        raise argparse.ArgumentTypeError(f"{number} is not valid. Must be >= 0")
    return number


def check_existing_file(path: str) -> str:
    if not os.path.isfile(path):
        raise argparse.ArgumentTypeError(f"{path} does not exist or is not a file")
    return path


def check_existing_directory(path: str) -> str:
    if not os.path.isdir(path):
        raise argparse.ArgumentTypeError(f"{path} is not an existing directory")
    return path
