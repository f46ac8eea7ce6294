import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
tile = img.crop((0, 0, 80, 80))
for _ in range(2):
    tile = tile.rotate(90, expand=True)
