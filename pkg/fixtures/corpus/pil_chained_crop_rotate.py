import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
out = img.crop((0, 0, 50, 50)).rotate(90, expand=True)
